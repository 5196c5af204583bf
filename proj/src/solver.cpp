#include "exlab/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "exlab/kernels.hpp"

namespace exlab {

void SolverConfig::validate() const {
    if (!(grid_step > 0.0 && grid_step <= 0.1)) {
        throw std::invalid_argument("solver grid_step must lie in (0, 0.1]");
    }
    if (!(refine_tol > 0.0)) {
        throw std::invalid_argument("solver refine_tol must be positive");
    }
    if (max_refine_iters <= 0) {
        throw std::invalid_argument("solver max_refine_iters must be positive");
    }
    if (seeds == 0 || lattice_budget == 0) {
        throw std::invalid_argument("solver needs at least one seed and a non-empty lattice");
    }
}

SolverConfig SolverConfig::for_alphabet(std::size_t alphabet_size) {
    SolverConfig config;
    if (alphabet_size >= 5) {
        config.grid_step = 0.05;
    } else if (alphabet_size == 4) {
        config.grid_step = 0.02;
    }
    return config;
}

Constraint Constraint::gjs_at_most(std::size_t a, std::size_t b, double alpha, double bound) {
    Constraint c;
    c.kind = Kind::GjsAtMost;
    c.a = a;
    c.b = b;
    c.alpha = alpha;
    c.bound = bound;
    return c;
}

Constraint Constraint::kl_at_most(std::size_t a, Distribution ref, double bound) {
    Constraint c;
    c.kind = Kind::KlAtMost;
    c.a = a;
    c.bound = bound;
    c.ref = std::move(ref);
    return c;
}

Constraint Constraint::gjs_order(std::size_t closer, std::size_t farther, std::size_t anchor,
                                 double alpha) {
    Constraint c;
    c.kind = Kind::GjsOrder;
    c.a = closer;
    c.b = farther;
    c.c = anchor;
    c.alpha = alpha;
    return c;
}

Constraint Constraint::kl_order(std::size_t a, Distribution closer, Distribution farther) {
    Constraint c;
    c.kind = Kind::KlOrder;
    c.a = a;
    c.ref = std::move(closer);
    c.ref2 = std::move(farther);
    return c;
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Dense = std::vector<std::vector<double>>;

double entropy_term(std::span<const double> q) {
    double s = 0.0;
    for (double v : q) {
        if (v > 0.0) {
            s += v * std::log(v);
        }
    }
    return s;
}

// d gjs(a, b) / d a_x and d / d b_x, accumulated with a scale factor.
void add_gjs_grad(std::span<const double> a, std::span<const double> b, double alpha,
                  double factor, std::span<double> ga, std::span<double> gb) {
    const double inv = 1.0 / (1.0 + alpha);
    for (std::size_t x = 0; x < a.size(); ++x) {
        const double diff = b[x] - a[x];
        if (a[x] > 0.0) {
            ga[x] -= factor * alpha * std::log1p(diff * inv / a[x]);
        }
        if (b[x] > 0.0) {
            gb[x] -= factor * std::log1p(-alpha * diff * inv / b[x]);
        }
    }
}

void add_kl_grad(std::span<const double> q, const Distribution& ref, double factor,
                 std::span<double> g) {
    for (std::size_t x = 0; x < q.size(); ++x) {
        if (q[x] > 0.0) {
            g[x] += factor * std::log(q[x] / ref[x]);
        }
    }
}

class Problem {
public:
    Problem(std::span<const Distribution> targets, std::span<const double> weights,
            std::span<const Constraint> constraints)
        : targets_(targets), weights_(weights), constraints_(constraints) {
        if (targets.empty()) {
            throw std::invalid_argument("min_weighted_kl needs at least one variable");
        }
        if (weights.size() != targets.size()) {
            throw std::invalid_argument("weights and targets must be aligned");
        }
        alphabet_ = targets.front().size();
        for (const auto& t : targets) {
            require_same_alphabet(alphabet_, t.size());
        }
        for (double w : weights) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw std::invalid_argument("objective weights must be positive and finite");
            }
        }
        const std::size_t vars = targets.size();
        std::vector<std::vector<bool>> allowed(vars, std::vector<bool>(alphabet_, true));
        auto restrict_to = [&](std::size_t var, const Distribution& d) {
            for (std::size_t x = 0; x < alphabet_; ++x) {
                if (!(d[x] > 0.0)) {
                    allowed[var][x] = false;
                }
            }
        };
        for (std::size_t t = 0; t < vars; ++t) {
            restrict_to(t, targets[t]);
        }
        for (const auto& c : constraints) {
            auto check_var = [&](std::size_t v) {
                if (v >= vars) {
                    throw std::invalid_argument("constraint references variable " +
                                                std::to_string(v) + " outside the tuple");
                }
            };
            check_var(c.a);
            switch (c.kind) {
                case Constraint::Kind::GjsAtMost:
                    check_var(c.b);
                    break;
                case Constraint::Kind::GjsOrder:
                    check_var(c.b);
                    check_var(c.c);
                    break;
                case Constraint::Kind::KlAtMost:
                    if (!c.ref) {
                        throw std::invalid_argument("KL constraint without reference law");
                    }
                    require_same_alphabet(alphabet_, c.ref->size());
                    restrict_to(c.a, *c.ref);
                    break;
                case Constraint::Kind::KlOrder:
                    if (!c.ref || !c.ref2) {
                        throw std::invalid_argument("KL order constraint needs two laws");
                    }
                    require_same_alphabet(alphabet_, c.ref->size());
                    require_same_alphabet(alphabet_, c.ref2->size());
                    restrict_to(c.a, *c.ref);
                    restrict_to(c.a, *c.ref2);
                    break;
            }
            if (c.kind == Constraint::Kind::GjsAtMost || c.kind == Constraint::Kind::GjsOrder) {
                if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) {
                    throw std::invalid_argument("GJS constraint needs a positive alpha");
                }
            }
        }
        support_.resize(vars);
        offset_.resize(vars);
        dim_ = 0;
        for (std::size_t t = 0; t < vars; ++t) {
            for (std::size_t x = 0; x < alphabet_; ++x) {
                if (allowed[t][x]) {
                    support_[t].push_back(x);
                }
            }
            if (support_[t].empty()) {
                empty_support_ = true;
            }
            offset_[t] = dim_;
            dim_ += support_[t].empty() ? 0 : support_[t].size() - 1;
        }
    }

    std::size_t vars() const { return targets_.size(); }
    std::size_t alphabet() const { return alphabet_; }
    std::size_t dim() const { return dim_; }
    bool empty_support() const { return empty_support_; }
    const std::vector<std::size_t>& support(std::size_t t) const { return support_[t]; }
    std::size_t constraint_count() const { return constraints_.size(); }
    const Distribution& target(std::size_t t) const { return targets_[t]; }
    double weight(std::size_t t) const { return weights_[t]; }
    const Constraint& constraint(std::size_t c) const { return constraints_[c]; }

    void decode(const Vec& z, Dense& q) const {
        q.assign(vars(), std::vector<double>(alphabet_, 0.0));
        for (std::size_t t = 0; t < vars(); ++t) {
            const auto& sup = support_[t];
            const std::size_t s = sup.size();
            std::vector<double> logits(s);
            double peak = -kInf;
            for (std::size_t i = 0; i < s; ++i) {
                const double shift = i + 1 < s ? z[static_cast<Eigen::Index>(offset_[t] + i)] : 0.0;
                logits[i] = std::log(targets_[t][sup[i]]) + shift;
                peak = std::max(peak, logits[i]);
            }
            double total = 0.0;
            for (std::size_t i = 0; i < s; ++i) {
                logits[i] = std::exp(logits[i] - peak);
                total += logits[i];
            }
            for (std::size_t i = 0; i < s; ++i) {
                q[t][sup[i]] = logits[i] / total;
            }
        }
    }

    Vec encode(const Dense& q) const {
        Vec z = Vec::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t t = 0; t < vars(); ++t) {
            const auto& sup = support_[t];
            const std::size_t s = sup.size();
            if (s < 2) {
                continue;
            }
            // Pull the point slightly into the interior so every logit is finite.
            const double eps = 1e-4;
            auto rel = [&](std::size_t x) {
                const double v = (q[t][x] + eps) / (1.0 + eps * static_cast<double>(s));
                return std::log(v / targets_[t][x]);
            };
            const double last = rel(sup[s - 1]);
            for (std::size_t i = 0; i + 1 < s; ++i) {
                z[static_cast<Eigen::Index>(offset_[t] + i)] = rel(sup[i]) - last;
            }
        }
        return z;
    }

    double objective(const Dense& q) const {
        double f = 0.0;
        for (std::size_t t = 0; t < vars(); ++t) {
            f += weights_[t] * kl(q[t], targets_[t].probs());
        }
        return f;
    }

    double constraint_value(std::size_t ci, const Dense& q) const {
        const Constraint& c = constraints_[ci];
        switch (c.kind) {
            case Constraint::Kind::GjsAtMost:
                return gjs(q[c.a], q[c.b], c.alpha) - c.bound;
            case Constraint::Kind::KlAtMost:
                return kl(q[c.a], c.ref->probs()) - c.bound;
            case Constraint::Kind::GjsOrder:
                return gjs(q[c.a], q[c.c], c.alpha) - gjs(q[c.b], q[c.c], c.alpha);
            case Constraint::Kind::KlOrder:
                return kl(q[c.a], c.ref->probs()) - kl(q[c.a], c.ref2->probs());
        }
        return 0.0;
    }

    void add_objective_grad(const Dense& q, Dense& g) const {
        for (std::size_t t = 0; t < vars(); ++t) {
            add_kl_grad(q[t], targets_[t], weights_[t], g[t]);
        }
    }

    void add_constraint_grad(std::size_t ci, const Dense& q, double factor, Dense& g) const {
        const Constraint& c = constraints_[ci];
        switch (c.kind) {
            case Constraint::Kind::GjsAtMost:
                add_gjs_grad(q[c.a], q[c.b], c.alpha, factor, g[c.a], g[c.b]);
                break;
            case Constraint::Kind::KlAtMost:
                add_kl_grad(q[c.a], *c.ref, factor, g[c.a]);
                break;
            case Constraint::Kind::GjsOrder:
                add_gjs_grad(q[c.a], q[c.c], c.alpha, factor, g[c.a], g[c.c]);
                add_gjs_grad(q[c.b], q[c.c], c.alpha, -factor, g[c.b], g[c.c]);
                break;
            case Constraint::Kind::KlOrder:
                add_kl_grad(q[c.a], *c.ref, factor, g[c.a]);
                add_kl_grad(q[c.a], *c.ref2, -factor, g[c.a]);
                break;
        }
    }

    // Chain rule from dense gradients in Q to the logit coordinates.
    Vec chain(const Dense& q, const Dense& g) const {
        Vec out = Vec::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t t = 0; t < vars(); ++t) {
            const auto& sup = support_[t];
            const std::size_t s = sup.size();
            if (s < 2) {
                continue;
            }
            double mean = 0.0;
            for (std::size_t x : sup) {
                mean += q[t][x] * g[t][x];
            }
            for (std::size_t i = 0; i + 1 < s; ++i) {
                const std::size_t x = sup[i];
                out[static_cast<Eigen::Index>(offset_[t] + i)] = q[t][x] * (g[t][x] - mean);
            }
        }
        return out;
    }

private:
    std::span<const Distribution> targets_;
    std::span<const double> weights_;
    std::span<const Constraint> constraints_;
    std::size_t alphabet_ = 0;
    std::vector<std::vector<std::size_t>> support_;
    std::vector<std::size_t> offset_;
    std::size_t dim_ = 0;
    bool empty_support_ = false;
};

double max_violation(const Problem& problem, const Dense& q) {
    double worst = 0.0;
    for (std::size_t c = 0; c < problem.constraint_count(); ++c) {
        worst = std::max(worst, problem.constraint_value(c, q));
    }
    return worst;
}

// Augmented Lagrangian for inequality constraints g_c <= 0, minimized by a
// damped Newton method in logit coordinates.
class AugmentedLagrangian {
public:
    AugmentedLagrangian(const Problem& problem, const SolverConfig& config)
        : problem_(problem), config_(config),
          multipliers_(problem.constraint_count(), 0.0) {
        double scale = 1.0;
        for (std::size_t t = 0; t < problem.vars(); ++t) {
            scale = std::max(scale, problem.weight(t));
        }
        penalty_ = 10.0 * scale;
    }

    struct Outcome {
        Dense q;
        double objective = kInf;
        double violation = kInf;
    };

    Outcome run(Vec z) {
        Dense q;
        double previous_violation = kInf;
        for (int outer = 0; outer < 60; ++outer) {
            z = minimize_inner(std::move(z));
            problem_.decode(z, q);
            const double violation = max_violation(problem_, q);
            double shift = 0.0;
            for (std::size_t c = 0; c < multipliers_.size(); ++c) {
                const double g = problem_.constraint_value(c, q);
                const double next = std::max(0.0, multipliers_[c] + penalty_ * g);
                shift = std::max(shift, std::abs(next - multipliers_[c]));
                multipliers_[c] = next;
            }
            if (violation <= config_.refine_tol && shift <= 1e-9 * (1.0 + max_multiplier())) {
                break;
            }
            if (violation > 0.25 * previous_violation && violation > config_.refine_tol) {
                penalty_ = std::min(penalty_ * 10.0, 1e13);
            }
            previous_violation = violation;
        }
        Outcome out;
        problem_.decode(z, out.q);
        out.objective = problem_.objective(out.q);
        out.violation = max_violation(problem_, out.q);
        return out;
    }

private:
    double max_multiplier() const {
        double m = 0.0;
        for (double v : multipliers_) {
            m = std::max(m, v);
        }
        return m;
    }

    double merit(const Vec& z, Dense& q) const {
        problem_.decode(z, q);
        double phi = problem_.objective(q);
        for (std::size_t c = 0; c < multipliers_.size(); ++c) {
            const double g = problem_.constraint_value(c, q);
            const double shifted = std::max(0.0, multipliers_[c] + penalty_ * g);
            phi += (shifted * shifted - multipliers_[c] * multipliers_[c]) / (2.0 * penalty_);
        }
        return phi;
    }

    Vec gradient(const Vec& z, Dense& q) const {
        problem_.decode(z, q);
        Dense g(problem_.vars(), std::vector<double>(problem_.alphabet(), 0.0));
        problem_.add_objective_grad(q, g);
        for (std::size_t c = 0; c < multipliers_.size(); ++c) {
            const double value = problem_.constraint_value(c, q);
            const double factor = std::max(0.0, multipliers_[c] + penalty_ * value);
            if (factor > 0.0) {
                problem_.add_constraint_grad(c, q, factor, g);
            }
        }
        return problem_.chain(q, g);
    }

    Vec minimize_inner(Vec z) const {
        const Eigen::Index n = z.size();
        if (n == 0) {
            return z;
        }
        Dense q;
        double damping = 0.0;
        double phi = merit(z, q);
        for (int iter = 0; iter < config_.max_refine_iters; ++iter) {
            const Vec g = gradient(z, q);
            if (g.lpNorm<Eigen::Infinity>() <= 0.1 * config_.refine_tol) {
                break;
            }
            Mat h(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double step = 1e-6 * std::max(1.0, std::abs(z[i]));
                Vec zp = z;
                zp[i] += step;
                h.col(i) = (gradient(zp, q) - g) / step;
            }
            h = 0.5 * (h + h.transpose()).eval();
            const double diag_scale = std::max(1e-12, h.diagonal().cwiseAbs().maxCoeff());

            bool moved = false;
            for (int attempt = 0; attempt < 60 && !moved; ++attempt) {
                Mat shifted = h;
                shifted.diagonal().array() += damping;
                Eigen::LLT<Mat> llt(shifted);
                if (llt.info() != Eigen::Success) {
                    damping = std::max(2.0 * damping, 1e-10 * diag_scale);
                    continue;
                }
                const Vec d = llt.solve(-g);
                const double slope = g.dot(d);
                if (!(slope < 0.0) || !d.allFinite()) {
                    damping = std::max(2.0 * damping, 1e-10 * diag_scale);
                    continue;
                }
                double t = 1.0;
                for (int ls = 0; ls < 50; ++ls) {
                    const Vec trial = z + t * d;
                    const double phi_trial = merit(trial, q);
                    if (std::isfinite(phi_trial) && phi_trial <= phi + 1e-4 * t * slope) {
                        const double moved_by = (t * d).lpNorm<Eigen::Infinity>();
                        z = trial;
                        phi = phi_trial;
                        moved = true;
                        damping = t == 1.0 ? damping * 0.25 : std::max(4.0 * damping, 1e-10 * diag_scale);
                        if (damping < 1e-14 * diag_scale) {
                            damping = 0.0;
                        }
                        if (moved_by < 1e-15) {
                            return z;
                        }
                        break;
                    }
                    t *= 0.5;
                }
                if (!moved) {
                    // The line search stalled: the model is not trustworthy.
                    damping = std::max(10.0 * damping, 1e-6 * diag_scale);
                    if (damping > 1e12 * diag_scale) {
                        return z;
                    }
                }
            }
            if (!moved) {
                break;
            }
        }
        return z;
    }

    const Problem& problem_;
    const SolverConfig& config_;
    std::vector<double> multipliers_;
    double penalty_ = 10.0;
};

// All compositions of m into s non-negative parts, as coordinates divided by m.
void compositions(std::size_t m, std::size_t s, std::vector<std::vector<double>>& out) {
    std::vector<std::size_t> parts(s, 0);
    auto emit = [&]() {
        std::vector<double> point(s);
        for (std::size_t i = 0; i < s; ++i) {
            point[i] = static_cast<double>(parts[i]) / static_cast<double>(m);
        }
        out.push_back(std::move(point));
    };
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
        if (pos + 1 == s) {
            parts[pos] = left;
            emit();
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            parts[pos] = v;
            rec(pos + 1, left - v);
        }
    };
    rec(0, m);
}

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return r;
}

struct Lattice {
    std::size_t resolution = 0;
    // Dense points (alphabet length) for each variable.
    std::vector<std::vector<std::vector<double>>> points;
};

Lattice build_lattice(const Problem& problem, const SolverConfig& config) {
    Lattice lattice;
    std::size_t m = static_cast<std::size_t>(std::lround(1.0 / config.grid_step));
    m = std::max<std::size_t>(m, 2);
    auto product = [&](std::size_t res) {
        double p = 1.0;
        for (std::size_t t = 0; t < problem.vars(); ++t) {
            const std::size_t s = problem.support(t).size();
            p *= binomial(res + s - 1, s - 1);
        }
        return p;
    };
    while (m > 2 && product(m) > static_cast<double>(config.lattice_budget)) {
        m = std::max<std::size_t>(2, static_cast<std::size_t>(static_cast<double>(m) * 0.85));
    }
    lattice.resolution = m;
    lattice.points.resize(problem.vars());
    for (std::size_t t = 0; t < problem.vars(); ++t) {
        const auto& sup = problem.support(t);
        std::vector<std::vector<double>> local;
        compositions(m, sup.size(), local);
        for (const auto& p : local) {
            std::vector<double> dense(problem.alphabet(), 0.0);
            for (std::size_t i = 0; i < sup.size(); ++i) {
                dense[sup[i]] = p[i];
            }
            lattice.points[t].push_back(std::move(dense));
        }
    }
    return lattice;
}

// D(q || ref) for every lattice point of one variable via the affine-rows kernel.
std::vector<double> lattice_kl(const std::vector<std::vector<double>>& pts, const Distribution& ref) {
    const std::size_t count = pts.size();
    const std::size_t width = ref.size();
    std::vector<std::vector<double>> soa(width, std::vector<double>(count));
    std::vector<double> base(count);
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t x = 0; x < width; ++x) {
            soa[x][k] = pts[k][x];
        }
        base[k] = entropy_term(pts[k]);
    }
    std::vector<const double*> rows(width);
    std::vector<double> neg_log(width);
    for (std::size_t x = 0; x < width; ++x) {
        rows[x] = soa[x].data();
        neg_log[x] = ref[x] > 0.0 ? -std::log(ref[x]) : kInf;
    }
    std::vector<double> out(count);
    kernels::active().affine_rows(rows.data(), width, neg_log.data(), base.data(), out.data(),
                                  count);
    return out;
}

std::vector<double> lattice_gjs(const std::vector<std::vector<double>>& a,
                                const std::vector<std::vector<double>>& b, double alpha) {
    std::vector<double> table(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            table[i * b.size() + j] = gjs(a[i], b[j], alpha);
        }
    }
    return table;
}

struct Candidate {
    double key = kInf;
    double objective = kInf;
    double violation = kInf;
    std::vector<std::size_t> index;
};

std::vector<Candidate> lattice_seeds(const Problem& problem, const Lattice& lattice,
                                     const SolverConfig& config) {
    const std::size_t vars = problem.vars();
    std::vector<std::vector<double>> obj(vars);
    for (std::size_t t = 0; t < vars; ++t) {
        obj[t] = lattice_kl(lattice.points[t], problem.target(t));
        for (double& v : obj[t]) {
            v *= problem.weight(t);
        }
    }
    // Per-constraint lookup tables.
    struct Table {
        std::vector<double> first;   // indexed by (a, b) or (a, c) or a
        std::vector<double> second;  // (b, c) for order constraints
    };
    std::vector<Table> tables(problem.constraint_count());
    for (std::size_t ci = 0; ci < problem.constraint_count(); ++ci) {
        const Constraint& c = problem.constraint(ci);
        switch (c.kind) {
            case Constraint::Kind::GjsAtMost:
                tables[ci].first = lattice_gjs(lattice.points[c.a], lattice.points[c.b], c.alpha);
                break;
            case Constraint::Kind::KlAtMost:
                tables[ci].first = lattice_kl(lattice.points[c.a], *c.ref);
                break;
            case Constraint::Kind::GjsOrder:
                tables[ci].first = lattice_gjs(lattice.points[c.a], lattice.points[c.c], c.alpha);
                tables[ci].second = lattice_gjs(lattice.points[c.b], lattice.points[c.c], c.alpha);
                break;
            case Constraint::Kind::KlOrder: {
                auto d1 = lattice_kl(lattice.points[c.a], *c.ref);
                auto d2 = lattice_kl(lattice.points[c.a], *c.ref2);
                for (std::size_t k = 0; k < d1.size(); ++k) {
                    d1[k] -= d2[k];
                }
                tables[ci].first = std::move(d1);
                break;
            }
        }
    }

    const std::size_t keep = 64;
    std::vector<Candidate> best;
    auto consider = [&](double objective, double violation, const std::vector<std::size_t>& idx) {
        // Feasible points rank by objective, infeasible ones after all feasible ones.
        const double key = violation <= 0.0 ? objective : 1e12 + violation;
        if (best.size() == keep && key >= best.back().key) {
            return;
        }
        Candidate cand{key, objective, violation, idx};
        auto pos = std::upper_bound(best.begin(), best.end(), cand,
                                    [](const Candidate& l, const Candidate& r) { return l.key < r.key; });
        best.insert(pos, std::move(cand));
        if (best.size() > keep) {
            best.pop_back();
        }
    };

    std::vector<std::size_t> idx(vars, 0);
    std::vector<std::size_t> sizes(vars);
    for (std::size_t t = 0; t < vars; ++t) {
        sizes[t] = lattice.points[t].size();
    }
    while (true) {
        double objective = 0.0;
        for (std::size_t t = 0; t < vars; ++t) {
            objective += obj[t][idx[t]];
        }
        double violation = 0.0;
        for (std::size_t ci = 0; ci < tables.size(); ++ci) {
            const Constraint& c = problem.constraint(ci);
            double g = 0.0;
            switch (c.kind) {
                case Constraint::Kind::GjsAtMost:
                    g = tables[ci].first[idx[c.a] * sizes[c.b] + idx[c.b]] - c.bound;
                    break;
                case Constraint::Kind::KlAtMost:
                    g = tables[ci].first[idx[c.a]] - c.bound;
                    break;
                case Constraint::Kind::GjsOrder:
                    g = tables[ci].first[idx[c.a] * sizes[c.c] + idx[c.c]] -
                        tables[ci].second[idx[c.b] * sizes[c.c] + idx[c.c]];
                    break;
                case Constraint::Kind::KlOrder:
                    g = tables[ci].first[idx[c.a]];
                    break;
            }
            violation += std::max(0.0, g);
        }
        consider(objective, violation, idx);
        std::size_t t = 0;
        while (t < vars) {
            if (++idx[t] < sizes[t]) {
                break;
            }
            idx[t] = 0;
            ++t;
        }
        if (t == vars) {
            break;
        }
    }

    // Spread the seeds: skip candidates within one lattice step of a chosen one.
    std::vector<Candidate> seeds;
    const double step = 1.0 / static_cast<double>(lattice.resolution);
    for (const auto& cand : best) {
        bool close = false;
        for (const auto& chosen : seeds) {
            double dist = 0.0;
            for (std::size_t t = 0; t < vars; ++t) {
                const auto& p = lattice.points[t][cand.index[t]];
                const auto& r = lattice.points[t][chosen.index[t]];
                for (std::size_t x = 0; x < p.size(); ++x) {
                    dist = std::max(dist, std::abs(p[x] - r[x]));
                }
            }
            if (dist < 1.5 * step) {
                close = true;
                break;
            }
        }
        if (!close) {
            seeds.push_back(cand);
        }
        if (seeds.size() == config.seeds) {
            break;
        }
    }
    return seeds;
}

std::vector<Distribution> to_distributions(const Dense& q) {
    std::vector<Distribution> out;
    out.reserve(q.size());
    for (const auto& v : q) {
        out.push_back(Distribution::normalized(v));
    }
    return out;
}

}  // namespace

PointEvaluation evaluate_point(std::span<const Distribution> targets,
                               std::span<const double> weights,
                               std::span<const Constraint> constraints,
                               std::span<const Distribution> point) {
    const Problem problem(targets, weights, constraints);
    if (point.size() != targets.size()) {
        throw std::invalid_argument("point must assign every variable");
    }
    Dense q;
    for (const auto& d : point) {
        require_same_alphabet(problem.alphabet(), d.size());
        q.emplace_back(d.probs().begin(), d.probs().end());
    }
    return {problem.objective(q), max_violation(problem, q)};
}

namespace {

MinResult solve_direct(std::span<const Distribution> targets, std::span<const double> weights,
                       std::span<const Constraint> constraints, const SolverConfig& config) {
    const Problem problem(targets, weights, constraints);
    MinResult result;
    if (problem.empty_support()) {
        return result;
    }

    // The unconstrained optimum Q_t = target_t is the global one when feasible.
    Dense at_targets;
    for (const auto& t : targets) {
        at_targets.emplace_back(t.probs().begin(), t.probs().end());
    }
    if (max_violation(problem, at_targets) <= 0.0) {
        result.value = 0.0;
        result.argmin = to_distributions(at_targets);
        result.feasible = true;
        return result;
    }

    const Lattice lattice = build_lattice(problem, config);
    const auto seeds = lattice_seeds(problem, lattice, config);

    double best_value = kInf;
    double best_violation = kInf;
    Dense best_q;
    for (const auto& seed : seeds) {
        Dense start(problem.vars());
        for (std::size_t t = 0; t < problem.vars(); ++t) {
            start[t] = lattice.points[t][seed.index[t]];
        }
        AugmentedLagrangian solver(problem, config);
        auto outcome = solver.run(problem.encode(start));
        const bool feasible = outcome.violation <= 10.0 * config.refine_tol;
        const bool best_feasible = best_violation <= 10.0 * config.refine_tol;
        const bool better =
            feasible ? (!best_feasible || outcome.objective < best_value)
                     : (!best_feasible && outcome.violation < best_violation);
        if (better) {
            best_value = outcome.objective;
            best_violation = outcome.violation;
            best_q = std::move(outcome.q);
        }
    }
    // Lattice points that are feasible as they stand are valid upper bounds too.
    if (!seeds.empty() && seeds.front().violation <= 0.0 &&
        seeds.front().objective < best_value) {
        Dense q(problem.vars());
        for (std::size_t t = 0; t < problem.vars(); ++t) {
            q[t] = lattice.points[t][seeds.front().index[t]];
        }
        best_value = seeds.front().objective;
        best_violation = 0.0;
        best_q = std::move(q);
    }

    if (best_q.empty()) {
        return result;
    }
    result.argmin = to_distributions(best_q);
    result.violation = std::max(0.0, best_violation);
    result.feasible = best_violation <= 10.0 * config.refine_tol;
    result.value = result.feasible ? best_value : kInf;
    return result;
}

}  // namespace

// A GJS ball of radius zero forces equality. Equal variables are merged into one
// whose target is the normalized weighted geometric mean of the originals:
//   sum_t w_t D(Q||P_t) = W D(Q||R) - W log Z.
MinResult min_weighted_kl(std::span<const Distribution> targets, std::span<const double> weights,
                          std::span<const Constraint> constraints, const SolverConfig& config) {
    config.validate();
    const std::size_t vars = targets.size();
    std::vector<std::size_t> root(vars);
    for (std::size_t t = 0; t < vars; ++t) {
        root[t] = t;
    }
    auto find = [&](std::size_t v) {
        while (root[v] != v) {
            v = root[v] = root[root[v]];
        }
        return v;
    };
    bool merged = false;
    for (const auto& c : constraints) {
        if (c.kind == Constraint::Kind::GjsAtMost && c.bound <= 0.0 && c.a < vars && c.b < vars) {
            if (c.bound < 0.0) {
                // Validate the rest of the input before reporting infeasibility.
                Problem(targets, weights, constraints);
                return {};
            }
            const std::size_t ra = find(c.a), rb = find(c.b);
            if (ra != rb) {
                root[std::max(ra, rb)] = std::min(ra, rb);
                merged = true;
            }
        }
    }
    if (!merged) {
        return solve_direct(targets, weights, constraints, config);
    }
    Problem(targets, weights, constraints);

    std::vector<std::size_t> slot(vars, vars);
    std::vector<std::size_t> reps;
    for (std::size_t t = 0; t < vars; ++t) {
        const std::size_t r = find(t);
        if (slot[r] == vars) {
            slot[r] = reps.size();
            reps.push_back(r);
        }
        slot[t] = slot[r];
    }
    const std::size_t alphabet = targets.front().size();
    std::vector<Distribution> reduced_targets;
    std::vector<double> reduced_weights;
    double offset = 0.0;
    for (std::size_t g = 0; g < reps.size(); ++g) {
        double total = 0.0;
        for (std::size_t t = 0; t < vars; ++t) {
            if (slot[t] == g) {
                total += weights[t];
            }
        }
        std::vector<double> log_r(alphabet, 0.0);
        for (std::size_t t = 0; t < vars; ++t) {
            if (slot[t] != g) {
                continue;
            }
            for (std::size_t x = 0; x < alphabet; ++x) {
                log_r[x] += weights[t] / total * std::log(targets[t][x]);
            }
        }
        double z = 0.0;
        std::vector<double> r(alphabet);
        for (std::size_t x = 0; x < alphabet; ++x) {
            r[x] = std::exp(log_r[x]);
            z += r[x];
        }
        if (!(z > 0.0)) {
            return {};
        }
        offset -= total * std::log(z);
        reduced_targets.push_back(Distribution::normalized(r));
        reduced_weights.push_back(total);
    }
    std::vector<Constraint> reduced;
    for (const auto& c : constraints) {
        Constraint m = c;
        m.a = slot[c.a];
        if (c.kind == Constraint::Kind::GjsAtMost || c.kind == Constraint::Kind::GjsOrder) {
            m.b = slot[c.b];
        }
        if (c.kind == Constraint::Kind::GjsOrder) {
            m.c = slot[c.c];
        }
        if (c.kind == Constraint::Kind::GjsAtMost && m.a == m.b) {
            continue;
        }
        if (c.kind == Constraint::Kind::GjsOrder && m.a == m.b) {
            continue;
        }
        reduced.push_back(std::move(m));
    }
    MinResult inner = solve_direct(reduced_targets, reduced_weights, reduced, config);
    MinResult result;
    result.feasible = inner.feasible;
    result.violation = inner.violation;
    result.value = inner.feasible ? std::max(0.0, inner.value + offset) : kInf;
    if (!inner.argmin.empty()) {
        for (std::size_t t = 0; t < vars; ++t) {
            result.argmin.push_back(inner.argmin[slot[t]]);
        }
    }
    return result;
}

}  // namespace exlab
