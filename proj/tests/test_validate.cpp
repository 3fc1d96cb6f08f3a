#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "opacheck/certificate.hpp"
#include "opacheck/report.hpp"

using namespace opacheck;

namespace {
const std::string kSpecsDir = SPECS_DIR;

AugmentedSystem vehicle_aug() { return build_product(load_spec(kSpecsDir + "/vehicle.json")); }

// The published degree-2 certificate and affine policy for the vehicle.
Certificate published_certificate(const AugmentedSystem& aug) {
    Certificate cert;
    cert.kind = CertificateKind::Safety;
    cert.provenance = Provenance::UserSupplied;
    cert.certificate = parse_polynomial(
        "0.9227*x1^2+0.2348*x2^2+0.9227*xh1^2+0.2348*xh2^2"
        "+0.006*x1*x2-0.006*xh1*x2-0.006*x1*xh2-0.006*xh1*xh2"
        "-0.4696*x2*xh2-1.845*x1*xh1-0.0002*xh1+0.0728",
        aug.pair_state_space);
    cert.policy = {parse_polynomial("0.8*x1 - 0.8*x2 + 1.5*xh1 - 1.5*xh2 + u", aug.full_space)};
    cert.eps_lo = 1.0;
    cert.eps_hi = 1.001;
    return cert;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}
}  // namespace

TEST_CASE("published certificate: level conditions hold at 10^4 samples") {
    auto aug = vehicle_aug();
    auto regions = build_safety_regions(aug, 0.01);
    auto cert = published_certificate(aug);
    auto report = validate_safety_certificate(cert, aug, regions, 10000, 99);
    REQUIRE(report.conditions.size() == 3);
    CHECK(report.conditions[0].name == "initial-level");
    CHECK(report.conditions[0].violations == 0);
    CHECK(report.conditions[1].name == "unsafe-level");
    CHECK(report.conditions[1].violations == 0);
    // The decrease condition fails where the policy output leaves the input
    // box; the excess is recorded, not asserted here (see the acceptance
    // suite for the frozen grid bound).
    CHECK(report.conditions[2].samples > 0);
}

TEST_CASE("zero certificate is rejected on the unsafe level") {
    auto aug = vehicle_aug();
    auto regions = build_safety_regions(aug, 0.01);
    auto cert = published_certificate(aug);
    cert.certificate = Polynomial::zero(aug.pair_state_space);
    auto report = validate_safety_certificate(cert, aug, regions, 2000, 5);
    CHECK(report.violated);
    // B = 0 < eps_hi everywhere on Ru.
    CHECK(report.conditions[1].violations == report.conditions[1].samples);
    CHECK(report.conditions[1].max_excess == doctest::Approx(1.001 - 1e-9));
}

TEST_CASE("witnesses re-evaluate to violations") {
    auto aug = vehicle_aug();
    auto regions = build_safety_regions(aug, 0.01);
    auto cert = published_certificate(aug);
    cert.certificate = Polynomial::zero(aug.pair_state_space);
    auto report = validate_safety_certificate(cert, aug, regions, 2000, 5);
    REQUIRE(!report.conditions[1].witnesses.empty());
    CHECK(report.conditions[1].witnesses.size() <= 10);
    for (const auto& w : report.conditions[1].witnesses)
        CHECK(cert.certificate.evaluate(w) < cert.eps_hi);
}

TEST_CASE("published policy leaves the input box") {
    auto aug = vehicle_aug();
    auto cert = published_certificate(aug);
    auto report = check_policy_bounds(cert, aug, 2000, 11);
    CHECK(report.out_of_bounds > 0);
    CHECK(report.fraction > 0.5);  // the policy is far outside U over most of X x X
    CHECK(!report.witnesses.empty());
}

TEST_CASE("identity-echo policy stays inside the input box") {
    auto aug = vehicle_aug();
    auto cert = published_certificate(aug);
    cert.policy = {parse_polynomial("u", aug.full_space)};
    auto report = check_policy_bounds(cert, aug, 2000, 11);
    CHECK(report.out_of_bounds == 0);
}

TEST_CASE("reach validation flags sign failures") {
    auto aug = build_product(load_spec(kSpecsDir + "/room.json"));
    auto regions = build_reach_regions(aug, 0);
    std::vector<std::string> names = {"T1", "T2", "Th1", "Th2", "vh1", "vh2"};
    std::vector<VarRole> roles = {VarRole::State, VarRole::State, VarRole::PartnerState,
                                  VarRole::PartnerState, VarRole::PartnerInput,
                                  VarRole::PartnerInput};
    VariableSpace policy_space(names, roles);

    Certificate cert;
    cert.kind = CertificateKind::Reach;
    cert.slack = 0.01;
    cert.policy = {Polynomial::zero(policy_space), Polynomial::zero(policy_space)};

    SUBCASE("V = 0 violates boundary positivity everywhere") {
        cert.certificate = Polynomial::zero(aug.pair_state_space);
        auto report = validate_reach_certificate(cert, aug, regions, 2000, 3);
        CHECK(report.violated);
        CHECK(report.conditions[1].violations == report.conditions[1].samples);
    }
    SUBCASE("V = -1 passes the initial region but fails the boundary") {
        cert.certificate = Polynomial::constant(aug.pair_state_space, -1.0);
        auto report = validate_reach_certificate(cert, aug, regions, 2000, 3);
        CHECK(report.conditions[0].violations == 0);
        CHECK(report.conditions[1].violations == report.conditions[1].samples);
    }
}

TEST_CASE("certificate JSON round-trip and byte determinism") {
    auto aug = vehicle_aug();
    auto cert = published_certificate(aug);
    save_certificate(cert, "cert_a.json");
    auto loaded = load_certificate("cert_a.json");
    CHECK(loaded.kind == CertificateKind::Safety);
    CHECK(loaded.certificate == cert.certificate);
    REQUIRE(loaded.policy.size() == 1);
    CHECK(loaded.policy[0] == cert.policy[0]);
    CHECK(loaded.eps_lo == cert.eps_lo);
    CHECK(loaded.eps_hi == cert.eps_hi);
    save_certificate(loaded, "cert_b.json");
    CHECK(slurp("cert_a.json") == slurp("cert_b.json"));
}

TEST_CASE("malformed certificate files are rejected") {
    {
        std::ofstream f("cert_bad.json");
        f << "{\"kind\": \"sideways\"}";
    }
    CHECK_THROWS(load_certificate("cert_bad.json"));
    CHECK_THROWS(load_certificate("cert_missing.json"));
}
