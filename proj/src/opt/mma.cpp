#include "stretchopt/opt/mma.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace stretchopt::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mma::Mma(int n, int m, VectorXd lower, VectorXd upper, MmaSettings settings)
    : n_(n), m_(m), lower_(std::move(lower)), upper_(std::move(upper)), s_(settings) {
    if (n <= 0 || m < 0) throw std::invalid_argument("Mma: bad problem size");
    if (lower_.size() != n || upper_.size() != n) throw std::invalid_argument("Mma: bound size mismatch");
    if (((upper_ - lower_).array() <= 0.0).any()) throw std::invalid_argument("Mma: empty bound interval");
}

void Mma::reset_history() {
    iter_ = 0;
    xold1_.resize(0);
    xold2_.resize(0);
}

namespace {

// Primal-dual interior point solve of the separable MMA subproblem
// (Svanberg's subsolv). Returns false when the iterates stop being finite.
struct SubproblemData {
    const VectorXd& low;
    const VectorXd& upp;
    const VectorXd& alfa;
    const VectorXd& beta;
    const VectorXd& p0;
    const VectorXd& q0;
    const MatrixXd& P;
    const MatrixXd& Q;
    const VectorXd& b;
    double a0;
    const VectorXd& a;
    const VectorXd& c;
    const VectorXd& d;
};

struct State {
    VectorXd x, y, lam, xsi, eta, mu, s;
    double z, zet;
};

double residual_norm(const SubproblemData& D, const State& S, double epsi, double* maxabs) {
    const VectorXd ux1 = D.upp - S.x;
    const VectorXd xl1 = S.x - D.low;
    const VectorXd plam = D.p0 + D.P.transpose() * S.lam;
    const VectorXd qlam = D.q0 + D.Q.transpose() * S.lam;
    const VectorXd gvec = D.P * ux1.cwiseInverse() + D.Q * xl1.cwiseInverse();
    const VectorXd dpsidx = plam.cwiseQuotient(ux1.cwiseProduct(ux1)) - qlam.cwiseQuotient(xl1.cwiseProduct(xl1));
    const VectorXd rex = dpsidx - S.xsi + S.eta;
    const VectorXd rey = D.c + D.d.cwiseProduct(S.y) - S.mu - S.lam;
    const double rez = D.a0 - S.zet - D.a.dot(S.lam);
    const VectorXd relam = gvec - D.a * S.z - S.y + S.s - D.b;
    const VectorXd rexsi = (S.xsi.cwiseProduct(S.x - D.alfa)).array() - epsi;
    const VectorXd reeta = (S.eta.cwiseProduct(D.beta - S.x)).array() - epsi;
    const VectorXd remu = (S.mu.cwiseProduct(S.y)).array() - epsi;
    const double rezet = S.zet * S.z - epsi;
    const VectorXd res = (S.lam.cwiseProduct(S.s)).array() - epsi;
    double sq = rex.squaredNorm() + rey.squaredNorm() + rez * rez + relam.squaredNorm() + rexsi.squaredNorm() +
                reeta.squaredNorm() + remu.squaredNorm() + rezet * rezet + res.squaredNorm();
    if (maxabs) {
        double mx = std::max(std::abs(rez), std::abs(rezet));
        for (const VectorXd* v : {&rex, &rey, &relam, &rexsi, &reeta, &remu, &res})
            if (v->size()) mx = std::max(mx, v->lpNorm<Eigen::Infinity>());
        *maxabs = mx;
    }
    return std::sqrt(sq);
}

bool subsolv(const SubproblemData& D, double epsimin, VectorXd& x_out) {
    const int n = static_cast<int>(D.low.size());
    const int m = static_cast<int>(D.b.size());
    State S;
    S.x = 0.5 * (D.alfa + D.beta);
    S.y = VectorXd::Ones(m);
    S.z = 1.0;
    S.lam = VectorXd::Ones(m);
    S.xsi = (S.x - D.alfa).cwiseInverse().cwiseMax(1.0);
    S.eta = (D.beta - S.x).cwiseInverse().cwiseMax(1.0);
    S.mu = (0.5 * D.c).cwiseMax(1.0);
    S.zet = 1.0;
    S.s = VectorXd::Ones(m);

    double epsi = 1.0;
    while (epsi > epsimin) {
        double residumax = 0.0;
        double residunorm = residual_norm(D, S, epsi, &residumax);
        int ittt = 0;
        while (residumax > 0.9 * epsi && ittt < 200) {
            ++ittt;
            const VectorXd ux1 = D.upp - S.x;
            const VectorXd xl1 = S.x - D.low;
            const VectorXd ux2 = ux1.cwiseProduct(ux1);
            const VectorXd xl2 = xl1.cwiseProduct(xl1);
            const VectorXd ux3 = ux1.cwiseProduct(ux2);
            const VectorXd xl3 = xl1.cwiseProduct(xl2);
            const VectorXd plam = D.p0 + D.P.transpose() * S.lam;
            const VectorXd qlam = D.q0 + D.Q.transpose() * S.lam;
            const VectorXd gvec = D.P * ux1.cwiseInverse() + D.Q * xl1.cwiseInverse();
            const MatrixXd GG = D.P * ux2.cwiseInverse().asDiagonal() - D.Q * xl2.cwiseInverse().asDiagonal();
            const VectorXd dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);
            const VectorXd delx = dpsidx - (epsi * (S.x - D.alfa).cwiseInverse()) +
                                  epsi * (D.beta - S.x).cwiseInverse();
            const VectorXd dely = D.c + D.d.cwiseProduct(S.y) - S.lam - epsi * S.y.cwiseInverse();
            const double delz = D.a0 - D.a.dot(S.lam) - epsi / S.z;
            const VectorXd dellam = gvec - D.a * S.z - S.y - D.b + epsi * S.lam.cwiseInverse();
            const VectorXd diagx = 2.0 * (plam.cwiseQuotient(ux3) + qlam.cwiseQuotient(xl3)) +
                                   S.xsi.cwiseQuotient(S.x - D.alfa) + S.eta.cwiseQuotient(D.beta - S.x);
            const VectorXd diagxinv = diagx.cwiseInverse();
            const VectorXd diagy = D.d + S.mu.cwiseQuotient(S.y);
            const VectorXd diagyinv = diagy.cwiseInverse();
            const VectorXd diaglam = S.s.cwiseQuotient(S.lam);
            const VectorXd diaglamyi = diaglam + diagyinv;

            VectorXd dx, dlam;
            double dz;
            if (m < n) {
                const VectorXd blam = dellam + dely.cwiseQuotient(diagy) - GG * delx.cwiseQuotient(diagx);
                MatrixXd AA(m + 1, m + 1);
                AA.topLeftCorner(m, m) = GG * diagxinv.asDiagonal() * GG.transpose();
                AA.topLeftCorner(m, m).diagonal() += diaglamyi;
                AA.topRightCorner(m, 1) = D.a;
                AA.bottomLeftCorner(1, m) = D.a.transpose();
                AA(m, m) = -S.zet / S.z;
                VectorXd bb(m + 1);
                bb << blam, delz;
                const VectorXd sol = AA.partialPivLu().solve(bb);
                dlam = sol.head(m);
                dz = sol[m];
                dx = -delx.cwiseQuotient(diagx) - (GG.transpose() * dlam).cwiseQuotient(diagx);
            } else {
                const VectorXd diaglamyiinv = diaglamyi.cwiseInverse();
                const VectorXd dellamyi = dellam + dely.cwiseQuotient(diagy);
                MatrixXd Axx = GG.transpose() * diaglamyiinv.asDiagonal() * GG;
                Axx.diagonal() += diagx;
                const double azz = S.zet / S.z + D.a.dot(D.a.cwiseQuotient(diaglamyi));
                const VectorXd axz = -GG.transpose() * D.a.cwiseQuotient(diaglamyi);
                const VectorXd bx = delx + GG.transpose() * dellamyi.cwiseQuotient(diaglamyi);
                const double bz = delz - D.a.dot(dellamyi.cwiseQuotient(diaglamyi));
                MatrixXd AA(n + 1, n + 1);
                AA.topLeftCorner(n, n) = Axx;
                AA.topRightCorner(n, 1) = axz;
                AA.bottomLeftCorner(1, n) = axz.transpose();
                AA(n, n) = azz;
                VectorXd bb(n + 1);
                bb << -bx, -bz;
                const VectorXd sol = AA.partialPivLu().solve(bb);
                dx = sol.head(n);
                dz = sol[n];
                dlam = (GG * dx).cwiseQuotient(diaglamyi) - dz * D.a.cwiseQuotient(diaglamyi) +
                       dellamyi.cwiseQuotient(diaglamyi);
            }
            const VectorXd dy = -dely.cwiseQuotient(diagy) + dlam.cwiseQuotient(diagy);
            const VectorXd dxsi = -S.xsi + epsi * (S.x - D.alfa).cwiseInverse() -
                                  S.xsi.cwiseProduct(dx).cwiseQuotient(S.x - D.alfa);
            const VectorXd deta = -S.eta + epsi * (D.beta - S.x).cwiseInverse() +
                                  S.eta.cwiseProduct(dx).cwiseQuotient(D.beta - S.x);
            const VectorXd dmu = -S.mu + epsi * S.y.cwiseInverse() - S.mu.cwiseProduct(dy).cwiseQuotient(S.y);
            const double dzet = -S.zet + epsi / S.z - S.zet * dz / S.z;
            const VectorXd ds = -S.s + epsi * S.lam.cwiseInverse() - S.s.cwiseProduct(dlam).cwiseQuotient(S.lam);

            // Largest step keeping every slack and dual strictly positive.
            double stmx = 1.0;
            auto bound = [&](const VectorXd& v, const VectorXd& dv) {
                for (Eigen::Index i = 0; i < v.size(); ++i) stmx = std::max(stmx, -1.01 * dv[i] / v[i]);
            };
            bound(S.y, dy);
            bound(S.lam, dlam);
            bound(S.xsi, dxsi);
            bound(S.eta, deta);
            bound(S.mu, dmu);
            bound(S.s, ds);
            stmx = std::max(stmx, -1.01 * dz / S.z);
            stmx = std::max(stmx, -1.01 * dzet / S.zet);
            for (int i = 0; i < n; ++i) {
                stmx = std::max(stmx, -1.01 * dx[i] / (S.x[i] - D.alfa[i]));
                stmx = std::max(stmx, 1.01 * dx[i] / (D.beta[i] - S.x[i]));
            }
            double steg = 1.0 / stmx;

            const State old = S;
            int itto = 0;
            double resinew = 2.0 * residunorm;
            while (resinew > residunorm && itto < 50) {
                ++itto;
                S.x = old.x + steg * dx;
                S.y = old.y + steg * dy;
                S.z = old.z + steg * dz;
                S.lam = old.lam + steg * dlam;
                S.xsi = old.xsi + steg * dxsi;
                S.eta = old.eta + steg * deta;
                S.mu = old.mu + steg * dmu;
                S.zet = old.zet + steg * dzet;
                S.s = old.s + steg * ds;
                resinew = residual_norm(D, S, epsi, &residumax);
                steg *= 0.5;
            }
            if (!std::isfinite(resinew)) return false;
            residunorm = resinew;
        }
        epsi *= 0.1;
    }
    if (!S.x.allFinite()) return false;
    x_out = S.x;
    return true;
}

}  // namespace

bool Mma::subproblem(const VectorXd& x, const VectorXd& df0, const VectorXd& f, const MatrixXd& df,
                     const VectorXd& move, const VectorXd& low, const VectorXd& upp, VectorXd& x_out) const {
    const VectorXd range = upper_ - lower_;
    VectorXd alfa(n_), beta(n_);
    for (int i = 0; i < n_; ++i) {
        alfa[i] = std::max({low[i] + s_.albefa * (x[i] - low[i]), x[i] - move[i] * range[i], lower_[i]});
        beta[i] = std::min({upp[i] - s_.albefa * (upp[i] - x[i]), x[i] + move[i] * range[i], upper_[i]});
        if (!(beta[i] > alfa[i])) {
            // Variable pinned at a bound by the move limit; give the solver a sliver.
            alfa[i] = std::min(alfa[i], x[i]);
            beta[i] = std::max(beta[i], alfa[i] + 1e-12 * range[i]);
        }
    }
    const VectorXd xmamiinv = range.cwiseMax(1e-5).cwiseInverse();
    const VectorXd ux1 = upp - x;
    const VectorXd xl1 = x - low;
    const VectorXd ux2 = ux1.cwiseProduct(ux1);
    const VectorXd xl2 = xl1.cwiseProduct(xl1);

    VectorXd p0 = df0.cwiseMax(0.0);
    VectorXd q0 = (-df0).cwiseMax(0.0);
    const VectorXd pq0 = 0.001 * (p0 + q0) + s_.raa0 * xmamiinv;
    p0 = (p0 + pq0).cwiseProduct(ux2);
    q0 = (q0 + pq0).cwiseProduct(xl2);

    MatrixXd P = df.cwiseMax(0.0);
    MatrixXd Q = (-df).cwiseMax(0.0);
    const MatrixXd PQ = 0.001 * (P + Q) + s_.raa0 * VectorXd::Ones(m_) * xmamiinv.transpose();
    P = (P + PQ) * ux2.asDiagonal();
    Q = (Q + PQ) * xl2.asDiagonal();
    const VectorXd b = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse() - f;

    const VectorXd a = VectorXd::Zero(m_);
    const VectorXd c = VectorXd::Constant(m_, s_.c);
    const VectorXd d = VectorXd::Constant(m_, s_.d);
    const SubproblemData D{low, upp, alfa, beta, p0, q0, P, Q, b, s_.a0, a, c, d};
    if (!subsolv(D, s_.epsimin, x_out)) return false;
    for (int i = 0; i < n_; ++i) {
        x_out[i] = std::clamp(x_out[i], std::max(lower_[i], x[i] - move[i] * range[i]),
                              std::min(upper_[i], x[i] + move[i] * range[i]));
    }
    return x_out.allFinite();
}

VectorXd Mma::step(const VectorXd& x, double f0, const VectorXd& df0, const VectorXd& f, const MatrixXd& df,
                   double move) {
    return step(x, f0, df0, f, df, VectorXd::Constant(n_, move));
}

VectorXd Mma::step(const VectorXd& x, double f0, const VectorXd& df0, const VectorXd& f, const MatrixXd& df,
                   const VectorXd& move) {
    (void)f0;
    if (x.size() != n_ || df0.size() != n_ || f.size() != m_ || df.rows() != m_ || df.cols() != n_ ||
        move.size() != n_)
        throw std::invalid_argument("Mma::step: dimension mismatch");
    if (!(move.array() > 0.0).all()) throw std::invalid_argument("Mma::step: move limit must be positive");
    if (!df0.allFinite() || !f.allFinite() || !df.allFinite())
        throw std::invalid_argument("Mma::step: non-finite sensitivities");

    const VectorXd range = upper_ - lower_;
    ++iter_;
    VectorXd low(n_), upp(n_);
    if (iter_ <= 2 || xold2_.size() != n_) {
        low = x - s_.asyinit * range;
        upp = x + s_.asyinit * range;
    } else {
        for (int i = 0; i < n_; ++i) {
            const double zzz = (x[i] - xold1_[i]) * (xold1_[i] - xold2_[i]);
            const double factor = zzz > 0.0 ? s_.asyincr : (zzz < 0.0 ? s_.asydecr : 1.0);
            low[i] = x[i] - factor * (xold1_[i] - low_[i]);
            upp[i] = x[i] + factor * (upp_[i] - xold1_[i]);
            low[i] = std::clamp(low[i], x[i] - 10.0 * range[i], x[i] - 0.01 * range[i]);
            upp[i] = std::clamp(upp[i], x[i] + 0.01 * range[i], x[i] + 10.0 * range[i]);
        }
    }

    VectorXd x_new;
    VectorXd mv = move;
    bool ok = false;
    // Without first-order information x itself solves the subproblem; the
    // interior-point solve would only reproduce it to within its barrier bias.
    if (df0.isZero(0.0) && df.isZero(0.0) && (f.array() <= 0.0).all()) {
        x_new = x;
        ok = true;
    }
    for (int attempt = 0; !ok && attempt <= s_.max_retries; ++attempt) {
        if (subproblem(x, df0, f, df, mv, low, upp, x_new)) {
            ok = true;
            break;
        }
        mv *= 0.5;
    }
    if (!ok) throw MmaFailure("Mma::step: subproblem failed after shrinking the move limit");
    last_move_ = mv.maxCoeff();
    xold2_ = xold1_.size() ? xold1_ : x;
    xold1_ = x;
    low_ = low;
    upp_ = upp;
    return x_new;
}

}  // namespace stretchopt::opt
