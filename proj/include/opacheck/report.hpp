/*
 * report.hpp
 * ----------
 * Machine-readable run reports and the JSON encodings shared with the
 * certificate exchange format.  Output is canonical: keys sorted, numbers
 * in shortest round-trip form, LF endings — identical runs produce
 * byte-identical files.  Wall-clock timing is deliberately kept out of the
 * files and printed to the console instead.
 */
#pragma once

#include <json.hpp>

#include "opacheck/certificate.hpp"

namespace opacheck {

struct RunReport {
    std::string task;
    std::string outcome;  // certified-opaque | certified-lack | inconclusive |
                          // candidate-rejected | input-error | completed
    nlohmann::json inputs = nlohmann::json::object();
    nlohmann::json details = nlohmann::json::object();
};

nlohmann::json report_to_json(const RunReport& report);
void write_report(const RunReport& report, const std::string& path);

// Polynomial as a graded-lex-ordered list of {"exp": [...], "coef": c}.
nlohmann::json polynomial_to_json(const Polynomial& p);
Polynomial polynomial_from_json(const nlohmann::json& j, const VariableSpace& space);

nlohmann::json variable_space_to_json(const VariableSpace& space);
VariableSpace variable_space_from_json(const nlohmann::json& j);

nlohmann::json validation_to_json(const ValidationReport& report);
nlohmann::json certificate_to_json(const Certificate& cert);

}  // namespace opacheck
