#include "opacheck/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace opacheck {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int SdpProblem::total_block_rows() const {
    return std::accumulate(block_dims.begin(), block_dims.end(), 0);
}

void SdpProblem::dump(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SdpError("cannot open dump file: " + path);
    out << "sdp " << block_dims.size() << " " << num_free << " " << num_rows() << "\n";
    for (std::size_t b = 0; b < block_dims.size(); ++b)
        out << "block " << b << " " << block_dims[b] << "\n";
    for (const auto& e : entries) {
        if (e.block < 0)
            out << "free " << e.row << " " << e.i << " " << e.value << "\n";
        else
            out << "entry " << e.row << " " << e.block << " " << e.i << " " << e.j << " "
                << e.value << "\n";
    }
    for (int r = 0; r < num_rows(); ++r) out << "rhs " << r << " " << rhs[r] << "\n";
}

EigCheck min_eigenvalue_check(const MatrixXd& matrix, double margin) {
    if (matrix.rows() != matrix.cols()) throw SdpError("min_eigenvalue_check: not square");
    double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) throw SdpError("min_eigenvalue_check: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    double min_eig = matrix.rows() == 0 ? 0.0 : es.eigenvalues().minCoeff();
    return {min_eig >= -margin, min_eig};
}

namespace {

// Sparse symmetric constraint matrix for one (row, block) pair.  An entry
// (i, j, v) with i < j represents A(i,j) = A(j,i) = v/2, so that
// <A, Q> = sum v * Q(i, j).
struct BlockEntry {
    int i, j;
    double v;
};

struct SolverWork {
    int m = 0;       // equality rows
    int nf = 0;      // free scalars
    int nblocks = 0;
    std::vector<int> dims;
    // per block: per row index, entries (rows without entries in the block
    // are absent from row_ids).
    std::vector<std::vector<int>> row_ids;                      // block -> rows touching it
    std::vector<std::vector<std::vector<BlockEntry>>> rows;     // block -> (local row idx) -> entries
    MatrixXd F;      // m x nf
    VectorXd b;      // scaled rhs
    std::vector<int> kept_rows;  // map to original row indices
};

double inner(const std::vector<BlockEntry>& a, const MatrixXd& Q) {
    double s = 0;
    for (const auto& e : a) s += e.v * Q(e.i, e.j);
    return s;
}

// mat += coeff * A for a sparse symmetric A.
void add_scaled(MatrixXd& mat, const std::vector<BlockEntry>& a, double coeff) {
    for (const auto& e : a) {
        if (e.i == e.j) {
            mat(e.i, e.i) += coeff * e.v;
        } else {
            mat(e.i, e.j) += coeff * e.v * 0.5;
            mat(e.j, e.i) += coeff * e.v * 0.5;
        }
    }
}

// B = X * A * Sinv for sparse symmetric A (dense outer-product accumulation).
void xas(MatrixXd& B, const MatrixXd& X, const std::vector<BlockEntry>& a, const MatrixXd& Sinv) {
    B.setZero();
    for (const auto& e : a) {
        if (e.i == e.j) {
            B.noalias() += e.v * X.col(e.i) * Sinv.row(e.i);
        } else {
            B.noalias() += (e.v * 0.5) * X.col(e.i) * Sinv.row(e.j);
            B.noalias() += (e.v * 0.5) * X.col(e.j) * Sinv.row(e.i);
        }
    }
}

// Largest step alpha with X + alpha*dX psd, via the Cholesky-whitened
// eigenvalue bound.
double max_step(const MatrixXd& X, const MatrixXd& dX) {
    if (X.rows() == 0) return std::numeric_limits<double>::infinity();
    Eigen::LLT<MatrixXd> llt(X);
    if (llt.info() != Eigen::Success) return 0.0;
    MatrixXd W = llt.matrixL().solve(dX);
    W = llt.matrixL().solve(W.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

struct Factorization {
    Eigen::LLT<MatrixXd> llt;
    Eigen::LDLT<MatrixXd> ldlt;
    bool use_llt = true;
    bool ok = false;

    VectorXd solve(const VectorXd& r) const {
        return use_llt ? VectorXd(llt.solve(r)) : VectorXd(ldlt.solve(r));
    }
    MatrixXd solve(const MatrixXd& r) const {
        return use_llt ? MatrixXd(llt.solve(r)) : MatrixXd(ldlt.solve(r));
    }
};

Factorization factor_spd(MatrixXd M) {
    Factorization f;
    double base = std::max(1e-30, M.diagonal().cwiseAbs().maxCoeff());
    for (double ridge : {0.0, 1e-13, 1e-11, 1e-9, 1e-7}) {
        MatrixXd Mr = M;
        Mr.diagonal().array() += ridge * base;
        f.llt.compute(Mr);
        if (f.llt.info() == Eigen::Success) {
            f.use_llt = true;
            f.ok = true;
            return f;
        }
    }
    MatrixXd Mr = M;
    Mr.diagonal().array() += 1e-9 * base;
    f.ldlt.compute(Mr);
    f.use_llt = false;
    f.ok = (f.ldlt.info() == Eigen::Success);
    return f;
}

}  // namespace

SdpSolution solve_feasibility(const SdpProblem& problem, const SolverConfig& config) {
    if (config.tolerance <= 0 || config.max_iterations < 1)
        throw SdpError("solver config: tolerances must be positive, max iterations >= 1");
    if (problem.total_block_rows() > config.budget)
        throw SdpError("problem exceeds the PSD budget: " +
                       std::to_string(problem.total_block_rows()) + " > " +
                       std::to_string(config.budget) + " summed block rows");
    for (int d : problem.block_dims)
        if (d <= 0) throw SdpError("block dimension must be positive");

    SdpSolution sol;
    const int nb = static_cast<int>(problem.block_dims.size());
    const int nf = problem.num_free;

    // Row scaling and trivial-row preprocessing.
    const int raw_rows = problem.num_rows();
    std::vector<double> row_max(raw_rows, 0.0);
    for (const auto& e : problem.entries) {
        if (e.row < 0 || e.row >= raw_rows) throw SdpError("entry row out of range");
        row_max[e.row] = std::max(row_max[e.row], std::abs(e.value));
    }
    SolverWork w;
    w.nblocks = nb;
    w.dims = problem.block_dims;
    std::vector<int> row_map(raw_rows, -1);
    std::vector<double> row_scale(raw_rows, 1.0);
    for (int r = 0; r < raw_rows; ++r) {
        if (row_max[r] == 0.0) {
            if (std::abs(problem.rhs[r]) > 1e-12) {
                // 0 = rhs with rhs nonzero: trivially infeasible; the ray is
                // the corresponding unit dual vector.
                sol.status = SolveStatus::Infeasible;
                sol.dual_ray = VectorXd::Zero(raw_rows);
                sol.dual_ray[r] = problem.rhs[r] > 0 ? 1.0 : -1.0;
                sol.ray_objective = std::abs(problem.rhs[r]);
                sol.message = "row " + std::to_string(r) + " has no variables but nonzero rhs";
                return sol;
            }
            continue;  // vacuous row
        }
        row_map[r] = static_cast<int>(w.kept_rows.size());
        w.kept_rows.push_back(r);
        row_scale[r] = std::max(row_max[r], std::abs(problem.rhs[r]));
    }
    w.m = static_cast<int>(w.kept_rows.size());
    w.nf = nf;
    w.b = VectorXd::Zero(w.m);
    for (int k = 0; k < w.m; ++k) w.b[k] = problem.rhs[w.kept_rows[k]] / row_scale[w.kept_rows[k]];

    w.F = MatrixXd::Zero(w.m, nf);
    w.row_ids.assign(nb, {});
    w.rows.assign(nb, {});
    std::vector<std::vector<int>> local_of(nb, std::vector<int>(w.m, -1));
    for (const auto& e : problem.entries) {
        int r = row_map[e.row];
        if (r < 0) continue;
        double v = e.value / row_scale[e.row];
        if (e.block < 0) {
            if (e.i < 0 || e.i >= nf) throw SdpError("free scalar index out of range");
            w.F(r, e.i) += v;
            continue;
        }
        if (e.block >= nb) throw SdpError("block index out of range");
        int d = w.dims[e.block];
        if (e.i < 0 || e.j < e.i || e.j >= d) throw SdpError("entry indices out of range");
        int& loc = local_of[e.block][r];
        if (loc < 0) {
            loc = static_cast<int>(w.row_ids[e.block].size());
            w.row_ids[e.block].push_back(r);
            w.rows[e.block].emplace_back();
        }
        w.rows[e.block][loc].push_back({e.i, e.j, v});
    }

    // HSD iterates.
    std::vector<MatrixXd> X(nb), S(nb);
    for (int b = 0; b < nb; ++b) {
        X[b] = MatrixXd::Identity(w.dims[b], w.dims[b]);
        S[b] = MatrixXd::Identity(w.dims[b], w.dims[b]);
    }
    VectorXd wfree = VectorXd::Zero(nf);
    VectorXd y = VectorXd::Zero(w.m);
    double tau = 1.0, kappa = 1.0;
    const double Ntot = std::max(1, problem.total_block_rows());
    const double bnorm = w.m > 0 ? w.b.cwiseAbs().maxCoeff() : 0.0;

    auto apply_A = [&](const std::vector<MatrixXd>& Xs, const VectorXd& wf) {
        VectorXd r = VectorXd::Zero(w.m);
        for (int b = 0; b < nb; ++b)
            for (std::size_t li = 0; li < w.row_ids[b].size(); ++li)
                r[w.row_ids[b][li]] += inner(w.rows[b][li], Xs[b]);
        if (nf > 0) r += w.F * wf;
        return r;
    };
    auto adjoint_block = [&](int b, const VectorXd& yv) {
        MatrixXd A = MatrixXd::Zero(w.dims[b], w.dims[b]);
        for (std::size_t li = 0; li < w.row_ids[b].size(); ++li)
            add_scaled(A, w.rows[b][li], yv[w.row_ids[b][li]]);
        return A;
    };

    auto finalize_feasible = [&]() -> bool {
        sol.blocks.resize(nb);
        for (int b = 0; b < nb; ++b) sol.blocks[b] = X[b] / tau;
        sol.free_values = wfree / tau;
        VectorXd res = apply_A(sol.blocks, sol.free_values) - w.b;
        sol.primal_residual = w.m > 0 ? res.cwiseAbs().maxCoeff() / (1.0 + bnorm) : 0.0;
        sol.min_block_eig = 0;
        for (int b = 0; b < nb; ++b) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.blocks[b], Eigen::EigenvaluesOnly);
            sol.min_block_eig = std::min(sol.min_block_eig, es.eigenvalues().minCoeff());
        }
        // Independent re-verification; a failed check downgrades to unknown.
        if (sol.primal_residual <= config.tolerance && sol.min_block_eig >= -1e-8) {
            sol.status = SolveStatus::Feasible;
            return true;
        }
        return false;
    };

    auto try_infeasible = [&]() -> bool {
        double bty = w.m > 0 ? w.b.dot(y) : 0.0;
        if (bty <= 0) return false;
        VectorXd yr = y / bty;
        double fres = nf > 0 ? (w.F.transpose() * yr).cwiseAbs().maxCoeff() : 0.0;
        if (fres > config.infeasibility_tol) return false;
        double worst = 0;
        for (int b = 0; b < nb; ++b) {
            MatrixXd Z = adjoint_block(b, yr);  // need Z <= 0
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(Z, Eigen::EigenvaluesOnly);
            worst = std::max(worst, es.eigenvalues().maxCoeff());
        }
        if (worst > config.infeasibility_tol) return false;
        sol.status = SolveStatus::Infeasible;
        sol.dual_ray = VectorXd::Zero(raw_rows);
        for (int k = 0; k < w.m; ++k)
            sol.dual_ray[w.kept_rows[k]] = yr[k] / row_scale[w.kept_rows[k]];
        sol.ray_objective = 1.0;  // normalized so that b . ray = 1
        sol.message = "dual improving ray certifies infeasibility";
        return true;
    };

    if (w.m == 0) {
        // No effective constraints: the identity point is feasible.
        tau = 1.0;
        finalize_feasible();
        sol.message = "no effective equality rows";
        return sol;
    }

    int stalls = 0;
    std::vector<MatrixXd> Sinv(nb), Rd(nb), D(nb), dSa(nb), dXa(nb), dS(nb), dX(nb);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        sol.iterations = iter;

        double xs = 0;
        for (int b = 0; b < nb; ++b) xs += X[b].cwiseProduct(S[b]).sum();
        double mu = (xs + tau * kappa) / (Ntot + 1);
        sol.mu = mu;

        VectorXd rp = w.b * tau - apply_A(X, wfree);
        for (int b = 0; b < nb; ++b) Rd[b] = -adjoint_block(b, y) - S[b];
        VectorXd rf = nf > 0 ? VectorXd(-w.F.transpose() * y) : VectorXd();
        double rg = w.b.dot(y) - kappa;

        // Convergence: the scaled point is primal feasible.
        double pres = rp.cwiseAbs().maxCoeff() / (tau * (1.0 + bnorm));
        if (pres <= config.tolerance && finalize_feasible()) return sol;
        if (try_infeasible()) return sol;
        if (mu < 1e-16 || tau < 1e-14) {
            sol.message = "embedding collapsed without a certificate";
            break;
        }

        // Schur complement M = A (X kron_s Sinv) A^T plus saved factors.
        MatrixXd M = MatrixXd::Zero(w.m, w.m);
        bool breakdown = false;
        for (int b = 0; b < nb; ++b) {
            Eigen::LLT<MatrixXd> llt(S[b]);
            if (llt.info() != Eigen::Success) {
                breakdown = true;
                break;
            }
            Sinv[b] = llt.solve(MatrixXd::Identity(w.dims[b], w.dims[b]));
            MatrixXd B(w.dims[b], w.dims[b]);
            for (std::size_t lj = 0; lj < w.row_ids[b].size(); ++lj) {
                xas(B, X[b], w.rows[b][lj], Sinv[b]);
                MatrixXd U = 0.5 * (B + B.transpose());
                int rj = w.row_ids[b][lj];
                for (std::size_t li = 0; li < w.row_ids[b].size(); ++li) {
                    int ri = w.row_ids[b][li];
                    if (ri > rj) continue;
                    M(ri, rj) += inner(w.rows[b][li], U);
                }
            }
        }
        if (breakdown) {
            sol.message = "numerical breakdown while factoring the slack blocks";
            break;
        }
        M = M.selfadjointView<Eigen::Upper>();
        Factorization Mf = factor_spd(M);
        if (!Mf.ok) {
            sol.message = "Schur complement factorization failed";
            break;
        }

        MatrixXd MiF;
        Eigen::LDLT<MatrixXd> Gf;
        if (nf > 0) {
            MiF = Mf.solve(w.F);
            Gf.compute(MatrixXd(w.F.transpose() * MiF));
        }
        VectorXd Mib = Mf.solve(w.b);
        double beta2 = w.b.dot(Mib);
        VectorXd u2 = nf > 0 ? VectorXd(w.F.transpose() * Mib) : VectorXd();

        // One Newton solve for given sigma and optional Mehrotra cross terms.
        auto direction = [&](double sigma, const std::vector<MatrixXd>* crossX,
                             const std::vector<MatrixXd>* crossS, double cross_tk, VectorXd& dy,
                             VectorXd& dw, double& dtau, double& dkappa,
                             std::vector<MatrixXd>& dXo, std::vector<MatrixXd>& dSo) {
            VectorXd h = VectorXd::Zero(w.m);
            for (int b = 0; b < nb; ++b) {
                MatrixXd E = X[b] * Rd[b];
                if (crossX) E.noalias() += (*crossX)[b] * (*crossS)[b];
                MatrixXd T = E * Sinv[b];
                D[b] = sigma * mu * Sinv[b] - X[b] - 0.5 * (T + T.transpose());
                for (std::size_t li = 0; li < w.row_ids[b].size(); ++li)
                    h[w.row_ids[b][li]] += inner(w.rows[b][li], D[b]);
            }
            VectorXd r1 = rp - h;
            double r2 = -rg + (sigma * mu - tau * kappa - cross_tk) / tau;

            VectorXd Mir1 = Mf.solve(r1);
            double beta1 = w.b.dot(Mir1);
            if (nf > 0) {
                VectorXd u1 = w.F.transpose() * Mir1;
                VectorXd g_u2 = Gf.solve(u2);
                VectorXd g_u1rf = Gf.solve(VectorXd(u1 - rf));
                double denom = beta2 + kappa / tau - u2.dot(g_u2);
                if (std::abs(denom) < 1e-300) denom = 1e-300;
                dtau = (r2 - beta1 + u2.dot(g_u1rf)) / denom;
                dw = g_u1rf + g_u2 * dtau;
                dy = Mir1 - MiF * dw + Mib * dtau;
            } else {
                double denom = beta2 + kappa / tau;
                if (std::abs(denom) < 1e-300) denom = 1e-300;
                dtau = (r2 - beta1) / denom;
                dw.resize(0);
                dy = Mir1 + Mib * dtau;
            }
            dkappa = (sigma * mu - tau * kappa - cross_tk - kappa * dtau) / tau;
            for (int b = 0; b < nb; ++b) {
                MatrixXd Ady = adjoint_block(b, dy);
                dSo[b] = Rd[b] - Ady;
                MatrixXd T = X[b] * Ady * Sinv[b];
                dXo[b] = D[b] + 0.5 * (T + T.transpose());
            }
        };

        auto step_bound = [&](const std::vector<MatrixXd>& dXv, const std::vector<MatrixXd>& dSv,
                              double dtau, double dkappa) {
            double a = std::numeric_limits<double>::infinity();
            for (int b = 0; b < nb; ++b) {
                a = std::min(a, max_step(X[b], dXv[b]));
                a = std::min(a, max_step(S[b], dSv[b]));
            }
            if (dtau < 0) a = std::min(a, -tau / dtau);
            if (dkappa < 0) a = std::min(a, -kappa / dkappa);
            return a;
        };

        // Predictor.
        VectorXd dy, dw;
        double dtau = 0, dkappa = 0;
        direction(0.0, nullptr, nullptr, 0.0, dy, dw, dtau, dkappa, dXa, dSa);
        double a_aff = std::min(1.0, config.step_fraction * step_bound(dXa, dSa, dtau, dkappa));
        double mu_aff = tau * kappa + a_aff * (tau * dkappa + kappa * dtau) +
                        a_aff * a_aff * dtau * dkappa;
        for (int b = 0; b < nb; ++b)
            mu_aff += ((X[b] + a_aff * dXa[b]).cwiseProduct(S[b] + a_aff * dSa[b])).sum();
        mu_aff /= (Ntot + 1);
        double sigma = std::clamp(std::pow(std::max(0.0, mu_aff / mu), 3.0), 1e-6, 0.999);

        // Corrector with Mehrotra cross terms.
        double dtau_aff = dtau, dkappa_aff = dkappa;
        direction(sigma, &dXa, &dSa, dtau_aff * dkappa_aff, dy, dw, dtau, dkappa, dX, dS);
        double alpha = std::min(1.0, config.step_fraction * step_bound(dX, dS, dtau, dkappa));
        if (!std::isfinite(alpha) || alpha < 1e-10) {
            if (++stalls >= 3) {
                sol.message = "step length collapsed";
                break;
            }
            continue;
        }
        stalls = 0;
        for (int b = 0; b < nb; ++b) {
            X[b] += alpha * dX[b];
            S[b] += alpha * dS[b];
            X[b] = 0.5 * (X[b] + X[b].transpose()).eval();
            S[b] = 0.5 * (S[b] + S[b].transpose()).eval();
        }
        y += alpha * dy;
        if (nf > 0) wfree += alpha * dw;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    // Final attempt at a verdict before giving up.
    if (finalize_feasible()) return sol;
    if (try_infeasible()) return sol;
    sol.status = SolveStatus::Unknown;
    if (sol.message.empty()) sol.message = "iteration limit reached without a certificate";
    return sol;
}

}  // namespace opacheck
