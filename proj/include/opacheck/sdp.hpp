/*
 * sdp.hpp
 * -------
 * Dense semidefinite feasibility solver: block-diagonal PSD variables plus
 * free scalars subject to sparse linear equalities, solved by a primal-dual
 * path-following method on a homogeneous self-dual embedding.  Infeasible
 * problems yield a dual improving-ray witness; numerical breakdown is
 * reported as unknown, never as feasible.
 */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace opacheck {

class SdpError : public std::runtime_error {
public:
    explicit SdpError(const std::string& what) : std::runtime_error(what) {}
};

// Equalities  sum_b <A_b^(row), Q_b> + f^(row) . w = rhs_row  over PSD
// blocks Q_b and free scalars w.  Entries with i < j stand for both
// symmetric slots: the row value contributes value * Q_b(i, j) with the
// convention <A, Q> = sum over stored entries of value * Q(i, j).
struct SdpProblem {
    struct Entry {
        int row;
        int block;  // -1: free scalar, with i = scalar index and j = 0
        int i;
        int j;
        double value;
    };

    std::vector<int> block_dims;
    int num_free = 0;
    std::vector<Entry> entries;
    std::vector<double> rhs;

    int num_rows() const { return static_cast<int>(rhs.size()); }
    int total_block_rows() const;

    // Documented sparse text dump for cross-checks with external solvers.
    void dump(const std::string& path) const;
};

struct SolverConfig {
    double tolerance = 1e-7;        // primal/dual residuals and gap
    int max_iterations = 200;
    double infeasibility_tol = 1e-7;  // quality required of a dual ray
    double step_fraction = 0.98;      // fraction of the step to the boundary
    int budget = 1200;                // max summed PSD block rows
};

enum class SolveStatus { Feasible, Infeasible, Unknown };

struct SdpSolution {
    SolveStatus status = SolveStatus::Unknown;
    std::vector<Eigen::MatrixXd> blocks;  // scaled primal point (feasible only)
    Eigen::VectorXd free_values;
    double primal_residual = std::numeric_limits<double>::infinity();
    double min_block_eig = 0;
    double mu = 0;
    int iterations = 0;
    Eigen::VectorXd dual_ray;  // Farkas witness (infeasible only)
    double ray_objective = 0;
    std::string message;
};

SdpSolution solve_feasibility(const SdpProblem& problem, const SolverConfig& config = {});

struct EigCheck {
    bool pass = false;
    double min_eig = 0;
};

// Smallest eigenvalue of a symmetric matrix; pass iff min_eig >= -margin.
// Throws on asymmetry beyond 1e-12.
EigCheck min_eigenvalue_check(const Eigen::MatrixXd& matrix, double margin);

}  // namespace opacheck
