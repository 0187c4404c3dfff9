#include "recomb/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "recomb/csv.hpp"

namespace recomb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxNewtonIter = 100;
constexpr int kMaxHalvings = 30;
constexpr double kScoreTol = 1e-8;
constexpr double kLogLikRelTol = 1e-10;
constexpr double kEtaGuard = 100.0;  // |x'b| beyond this flags separation
constexpr double kBetaGuard = 1e4;

double t_pvalue(double t, double dof) {
    if (dof <= 0 || !std::isfinite(t)) return kNaN;
    const boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double normal_pvalue(double z) {
    if (!std::isfinite(z)) return kNaN;
    const boost::math::normal dist;
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

// Assembled estimation data after subsetting and listwise deletion.
struct Design {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;                      // without FE dummies
    std::vector<std::string> column_names;  // parallel to X columns
    std::vector<std::uint32_t> field;       // per kept row
    std::vector<int> year;
    std::vector<std::string> field_labels;  // dense field -> label
    bool has_intercept = false;
};

Design assemble(const AnalysisTable& table, const ModelSpec& spec, bool with_intercept) {
    for (const auto& c : spec.covariates) {
        if (c == spec.dv) {
            throw std::invalid_argument("dv '" + spec.dv + "' cannot also be a covariate");
        }
    }
    const std::vector<bool> mask = subset_mask(table, spec.subset);
    const std::span<const double> dv = table.column(spec.dv);
    std::vector<std::span<const double>> covs;
    covs.reserve(spec.covariates.size());
    for (const auto& name : spec.covariates) covs.push_back(table.column(name));

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (!mask[i]) continue;
        if (std::isnan(dv[i])) continue;
        bool ok = true;
        for (const auto& col : covs) {
            if (std::isnan(col[i])) {
                ok = false;
                break;
            }
        }
        if (ok) keep.push_back(i);
    }
    if (keep.empty()) throw std::runtime_error("no rows left after subset and listwise deletion");

    Design d;
    d.has_intercept = with_intercept;
    const std::size_t n = keep.size();
    const std::size_t p = covs.size() + (with_intercept ? 1 : 0);
    d.y.resize(static_cast<Eigen::Index>(n));
    d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    if (with_intercept) d.column_names.push_back("intercept");
    for (const auto& name : spec.covariates) d.column_names.push_back(name);
    d.field.reserve(n);
    d.year.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = keep[r];
        d.y[static_cast<Eigen::Index>(r)] = dv[i];
        std::size_t col = 0;
        if (with_intercept) d.X(static_cast<Eigen::Index>(r), col++) = 1.0;
        for (const auto& c : covs) d.X(static_cast<Eigen::Index>(r), col++) = c[i];
        d.field.push_back(table.field[i]);
        d.year.push_back(table.year[i]);
    }
    d.field_labels = table.field_names;
    return d;
}

// Relabels values into dense 0..G-1 by sorted order (deterministic across
// subsets and worker counts).
template <class T>
std::pair<std::vector<int>, std::vector<T>> dense_groups(std::span<const T> values) {
    std::vector<T> labels(values.begin(), values.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::vector<int> idx(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        idx[i] = static_cast<int>(
            std::lower_bound(labels.begin(), labels.end(), values[i]) - labels.begin());
    }
    return {std::move(idx), std::move(labels)};
}

void demean_inplace(Eigen::MatrixXd& m, std::span<const int> groups, int n_groups) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_groups, m.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_groups);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        sums.row(groups[static_cast<std::size_t>(i)]) += m.row(i);
        counts[groups[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int g = 0; g < n_groups; ++g) sums.row(g) /= counts[g];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m.row(i) -= sums.row(groups[static_cast<std::size_t>(i)]);
    }
}

void check_rank_or_throw(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    if (rank >= X.cols()) return;
    const auto perm = qr.colsPermutation().indices();
    std::string collinear;
    for (Eigen::Index i = rank; i < X.cols(); ++i) {
        if (!collinear.empty()) collinear += ", ";
        collinear += names[static_cast<std::size_t>(perm[i])];
    }
    throw std::runtime_error("design is rank deficient; collinear columns: " + collinear);
}

std::string field_dummy_name(const std::string& label) { return "field:" + label; }
std::string year_dummy_name(int year) { return "year:" + std::to_string(year); }

// Appends drop-first indicator columns for a grouping factor.
void append_dummies(Eigen::MatrixXd& X, std::vector<std::string>& names,
                    std::span<const int> groups, std::span<const std::string> labels) {
    if (labels.size() <= 1) return;
    const Eigen::Index n = X.rows();
    const Eigen::Index base = X.cols();
    X.conservativeResize(n, base + static_cast<Eigen::Index>(labels.size() - 1));
    X.rightCols(static_cast<Eigen::Index>(labels.size() - 1)).setZero();
    for (std::size_t g = 1; g < labels.size(); ++g) names.push_back(labels[g]);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int g = groups[static_cast<std::size_t>(i)];
        if (g > 0) X(i, base + g - 1) = 1.0;
    }
}

struct Likelihood {
    double value = 0.0;
    Eigen::VectorXd score;
    Eigen::MatrixXd hessian;  // negative second derivative (information)
    double max_abs_eta = 0.0;
};

}  // namespace

std::string fe_to_string(FixedEffects fe) {
    switch (fe) {
        case FixedEffects::none: return "none";
        case FixedEffects::field: return "field";
        case FixedEffects::field_year: return "field+year";
    }
    return "none";
}

FixedEffects fe_from_string(const std::string& name) {
    if (name == "none" || name.empty()) return FixedEffects::none;
    if (name == "field") return FixedEffects::field;
    if (name == "field+year" || name == "field_year") return FixedEffects::field_year;
    throw std::invalid_argument("unknown fixed-effects spec: " + name);
}

std::vector<bool> subset_mask(const AnalysisTable& table, const std::string& subset) {
    std::vector<bool> mask(table.n_rows(), true);
    if (subset.empty()) return mask;
    for (const std::string& clause : split(subset, ',')) {
        if (clause.empty()) continue;
        const auto eq = clause.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("bad subset clause (expected key=value): " + clause);
        }
        const std::string key = clause.substr(0, eq);
        const std::vector<std::string> values = split(clause.substr(eq + 1), '|');
        if (key == "field") {
            std::set<std::uint32_t> wanted;
            for (const auto& v : values) {
                for (std::uint32_t f = 0; f < table.field_names.size(); ++f) {
                    if (table.field_names[f] == v) wanted.insert(f);
                }
            }
            for (std::size_t i = 0; i < mask.size(); ++i) {
                if (!wanted.count(table.field[i])) mask[i] = false;
            }
        } else if (key == "year") {
            std::set<int> wanted;
            for (const auto& v : values) wanted.insert(std::stoi(v));
            for (std::size_t i = 0; i < mask.size(); ++i) {
                if (!wanted.count(table.year[i])) mask[i] = false;
            }
        } else {
            throw std::invalid_argument("unknown subset key: " + key);
        }
    }
    if (std::find(mask.begin(), mask.end(), true) == mask.end()) {
        throw std::runtime_error("subset '" + subset + "' matches no rows");
    }
    return mask;
}

Descriptives describe(const AnalysisTable& table, std::span<const std::string> variables) {
    if (table.n_rows() < 3) throw std::runtime_error("describe needs at least 3 rows");
    Descriptives d;
    const std::size_t k = variables.size();
    d.variables.assign(variables.begin(), variables.end());
    d.n.resize(k);
    d.mean.resize(k);
    d.sd.resize(k);
    d.r.assign(k, std::vector<double>(k, kNaN));
    d.p.assign(k, std::vector<double>(k, kNaN));
    d.pair_n.assign(k, std::vector<long long>(k, 0));

    std::vector<std::span<const double>> cols;
    for (const auto& v : d.variables) cols.push_back(table.column(v));

    for (std::size_t i = 0; i < k; ++i) {
        double sum = 0.0;
        long long n = 0;
        for (const double v : cols[i]) {
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        }
        d.n[i] = n;
        d.mean[i] = n > 0 ? sum / static_cast<double>(n) : kNaN;
        double ss = 0.0;
        for (const double v : cols[i]) {
            if (!std::isnan(v)) {
                const double e = v - d.mean[i];
                ss += e * e;
            }
        }
        d.sd[i] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : kNaN;
    }

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            // Pairwise-complete observations.
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            long long n = 0;
            for (std::size_t r = 0; r < table.n_rows(); ++r) {
                const double x = cols[i][r];
                const double y = cols[j][r];
                if (std::isnan(x) || std::isnan(y)) continue;
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
                ++n;
            }
            d.pair_n[i][j] = d.pair_n[j][i] = n;
            if (n < 3) continue;
            const double nn = static_cast<double>(n);
            const double cov = sxy - sx * sy / nn;
            const double vx = sxx - sx * sx / nn;
            const double vy = syy - sy * sy / nn;
            if (vx <= 0.0 || vy <= 0.0) continue;  // zero variance: undefined
            double r = cov / std::sqrt(vx * vy);
            r = std::clamp(r, -1.0, 1.0);
            d.r[i][j] = d.r[j][i] = r;
            const double dof = nn - 2.0;
            double p;
            if (std::abs(r) >= 1.0) {
                p = 0.0;
            } else {
                const double t = r * std::sqrt(dof / (1.0 - r * r));
                p = t_pvalue(t, dof);
            }
            d.p[i][j] = d.p[j][i] = p;
        }
    }
    return d;
}

RegressionResult ols(const AnalysisTable& table, const ModelSpec& spec) {
    const bool with_intercept = spec.fe == FixedEffects::none;
    Design d = assemble(table, spec, with_intercept);
    const auto n = d.X.rows();
    const auto p = d.X.cols();

    RegressionResult res;
    res.model = "ols";
    res.dv = spec.dv;
    res.fe = spec.fe;
    res.n = n;

    const double y_mean = d.y.mean();
    const double sst = (d.y.array() - y_mean).square().sum();

    long long absorbed_dof = 0;
    if (spec.fe != FixedEffects::none) {
        auto [field_idx, field_labels] = dense_groups<std::uint32_t>(d.field);
        const int gf = static_cast<int>(field_labels.size());
        if (spec.fe == FixedEffects::field) {
            demean_inplace(d.X, field_idx, gf);
            Eigen::MatrixXd ym = d.y;
            demean_inplace(ym, field_idx, gf);
            d.y = ym;
            absorbed_dof = gf;
        } else {
            auto [year_idx, year_labels] = dense_groups<int>(d.year);
            const int gy = static_cast<int>(year_labels.size());
            // Alternating within-transform for two factors; converges to the
            // joint projection.
            Eigen::MatrixXd z(n, p + 1);
            z.leftCols(p) = d.X;
            z.col(p) = d.y;
            for (int iter = 0; iter < 200; ++iter) {
                const Eigen::MatrixXd before = z;
                demean_inplace(z, field_idx, gf);
                demean_inplace(z, year_idx, gy);
                if ((z - before).cwiseAbs().maxCoeff() < 1e-12) break;
            }
            d.X = z.leftCols(p);
            d.y = z.col(p);
            absorbed_dof = gf + gy - 1;
        }
    }

    check_rank_or_throw(d.X, d.column_names);

    const Eigen::MatrixXd xtx = d.X.transpose() * d.X;
    const Eigen::VectorXd xty = d.X.transpose() * d.y;
    const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("normal equations not positive definite");
    }
    const Eigen::VectorXd beta = llt.solve(xty);
    const Eigen::VectorXd resid = d.y - d.X * beta;
    const double ssr = resid.squaredNorm();

    const double dof = static_cast<double>(n - p - absorbed_dof);
    if (dof <= 0) throw std::runtime_error("no residual degrees of freedom");
    const double sigma2 = ssr / dof;
    const Eigen::MatrixXd xtx_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));

    for (Eigen::Index j = 0; j < p; ++j) {
        Coefficient c;
        c.name = d.column_names[static_cast<std::size_t>(j)];
        c.estimate = beta[j];
        c.se = std::sqrt(sigma2 * xtx_inv(j, j));
        c.p = t_pvalue(beta[j] / c.se, dof);
        res.coefficients.push_back(std::move(c));
    }
    // Full-model R^2 against the undemeaned dv: the within residuals are the
    // full-model residuals once fixed effects are absorbed.
    res.r2 = sst > 0 ? 1.0 - ssr / sst : kNaN;
    res.converged = true;
    return res;
}

namespace {

Likelihood logit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& beta, bool need_derivatives) {
    Likelihood out;
    const Eigen::VectorXd eta = X * beta;
    out.max_abs_eta = eta.size() > 0 ? eta.cwiseAbs().maxCoeff() : 0.0;
    double ll = 0.0;
    Eigen::VectorXd mu(eta.size());
    Eigen::VectorXd w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double e = std::clamp(eta[i], -35.0, 35.0);
        const double m = 1.0 / (1.0 + std::exp(-e));
        mu[i] = m;
        w[i] = std::max(m * (1.0 - m), 1e-12);
        // log-likelihood with the same clamping for numerical agreement
        ll += y[i] * e - std::log1p(std::exp(e));
    }
    out.value = ll;
    if (need_derivatives) {
        out.score = X.transpose() * (y - mu);
        out.hessian = X.transpose() * w.asDiagonal() * X;
    }
    return out;
}

void fill_logit_result(RegressionResult& res, const Eigen::MatrixXd& hessian,
                       const Eigen::VectorXd& beta, const std::vector<std::string>& names,
                       double loglik) {
    const Eigen::Index k = beta.size();
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    for (Eigen::Index j = 0; j < k; ++j) {
        Coefficient c;
        c.name = names[static_cast<std::size_t>(j)];
        c.estimate = beta[j];
        c.se = std::sqrt(std::max(cov(j, j), 0.0));
        c.p = c.se > 0 ? normal_pvalue(beta[j] / c.se) : kNaN;
        res.coefficients.push_back(std::move(c));
    }
    res.loglik = loglik;
    res.aic = 2.0 * static_cast<double>(k) - 2.0 * loglik;
    // Joint Wald on every non-intercept coefficient.
    std::vector<Eigen::Index> tested;
    for (Eigen::Index j = 0; j < k; ++j) {
        if (names[static_cast<std::size_t>(j)] != "intercept") tested.push_back(j);
    }
    if (!tested.empty()) {
        Eigen::MatrixXd cov_ss(tested.size(), tested.size());
        Eigen::VectorXd b_s(tested.size());
        for (std::size_t a = 0; a < tested.size(); ++a) {
            b_s[static_cast<Eigen::Index>(a)] = beta[tested[a]];
            for (std::size_t b = 0; b < tested.size(); ++b) {
                cov_ss(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    cov(tested[a], tested[b]);
            }
        }
        res.wald = b_s.dot(cov_ss.ldlt().solve(b_s));
    }
}

}  // namespace

RegressionResult logit(const AnalysisTable& table, const ModelSpec& spec) {
    Design d = assemble(table, spec, /*with_intercept=*/true);

    RegressionResult res;
    res.model = "logit";
    res.dv = spec.dv;
    res.fe = spec.fe;
    res.n = d.X.rows();

    long long ones = 0;
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        if (d.y[i] != 0.0 && d.y[i] != 1.0) {
            throw std::runtime_error("logit dv must be 0/1; got " + format_double(d.y[i]));
        }
        if (d.y[i] == 1.0) ++ones;
    }
    if (ones == 0 || ones == d.y.size()) {
        throw std::runtime_error("logit dv has a single class");
    }

    // Fixed effects enter as explicit indicator columns (drop-first).
    if (spec.fe != FixedEffects::none) {
        auto [field_idx, field_dense] = dense_groups<std::uint32_t>(d.field);
        std::vector<std::string> labels;
        for (const auto f : field_dense) labels.push_back(field_dummy_name(d.field_labels[f]));
        append_dummies(d.X, d.column_names, field_idx, labels);
        if (spec.fe == FixedEffects::field_year) {
            auto [year_idx, year_dense] = dense_groups<int>(d.year);
            std::vector<std::string> ylabels;
            for (const int y : year_dense) ylabels.push_back(year_dummy_name(y));
            append_dummies(d.X, d.column_names, year_idx, ylabels);
        }
    }
    check_rank_or_throw(d.X, d.column_names);

    const Eigen::Index k = d.X.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    beta[0] = std::log(static_cast<double>(ones) /
                       static_cast<double>(d.y.size() - ones));  // warm start

    Likelihood cur = logit_loglik(d.X, d.y, beta, true);
    bool converged = false;
    std::string note;
    const bool trace = std::getenv("RECOMB_TRACE_NEWTON") != nullptr;
    for (int iter = 0; iter < kMaxNewtonIter; ++iter) {
        if (trace) {
            fprintf(stderr, "[newton] iter=%d ll=%.12g max|g|=%.3g max|eta|=%.3g\n", iter,
                    cur.value, cur.score.cwiseAbs().maxCoeff(), cur.max_abs_eta);
        }
        if (cur.score.cwiseAbs().maxCoeff() < kScoreTol) {
            converged = true;
            break;
        }
        const Eigen::VectorXd step = cur.hessian.ldlt().solve(cur.score);
        double lambda = 1.0;
        Eigen::VectorXd candidate;
        Likelihood next;
        int halvings = 0;
        // Half steps only on a real decrease; changes within rounding
        // noise of the current value are accepted as-is.
        const double noise = 1e-12 * (std::abs(cur.value) + 1.0);
        while (true) {
            candidate = beta + lambda * step;
            next = logit_loglik(d.X, d.y, candidate, false);
            if (next.value >= cur.value - noise || halvings >= kMaxHalvings) break;
            lambda /= 2.0;
            ++halvings;
        }
        const double rel_change =
            std::abs(next.value - cur.value) / (std::abs(cur.value) + 1.0);
        beta = candidate;
        cur = logit_loglik(d.X, d.y, beta, true);
        if (cur.max_abs_eta > kEtaGuard || beta.cwiseAbs().maxCoeff() > kBetaGuard) {
            note = "separation suspected: diverging coefficients";
            break;
        }
        if (rel_change < kLogLikRelTol) {
            converged = cur.score.cwiseAbs().maxCoeff() < 1e-6;
            if (converged) break;
        }
    }
    if (!converged && note.empty()) {
        note = cur.score.cwiseAbs().maxCoeff() < 1e-6 ? "" : "did not converge";
        converged = note.empty();
    }

    res.converged = converged;
    res.note = note;
    if (converged) {
        fill_logit_result(res, cur.hessian, beta, d.column_names, cur.value);
    }
    return res;
}

RegressionResult mnlogit(const AnalysisTable& table, const ModelSpec& spec,
                         int reference_category) {
    Design d = assemble(table, spec, /*with_intercept=*/true);

    RegressionResult res;
    res.model = "mnlogit";
    res.dv = spec.dv;
    res.fe = spec.fe;
    res.n = d.X.rows();

    // Observed categories; the reference must be present.
    std::set<int> observed;
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
        const double v = d.y[i];
        if (v != std::floor(v)) throw std::runtime_error("mnlogit dv must be integer categories");
        observed.insert(static_cast<int>(v));
    }
    if (observed.size() < 2) throw std::runtime_error("mnlogit dv has fewer than 2 categories");
    if (!observed.count(reference_category)) {
        throw std::runtime_error("reference category " + std::to_string(reference_category) +
                                 " absent from dv");
    }
    std::vector<int> cats;  // non-reference categories, ascending
    for (const int c : observed) {
        if (c != reference_category) cats.push_back(c);
    }
    const auto B = static_cast<Eigen::Index>(cats.size());

    if (spec.fe != FixedEffects::none) {
        auto [field_idx, field_dense] = dense_groups<std::uint32_t>(d.field);
        std::vector<std::string> labels;
        for (const auto f : field_dense) labels.push_back(field_dummy_name(d.field_labels[f]));
        append_dummies(d.X, d.column_names, field_idx, labels);
        if (spec.fe == FixedEffects::field_year) {
            auto [year_idx, year_dense] = dense_groups<int>(d.year);
            std::vector<std::string> ylabels;
            for (const int y : year_dense) ylabels.push_back(year_dummy_name(y));
            append_dummies(d.X, d.column_names, year_idx, ylabels);
        }
    }
    check_rank_or_throw(d.X, d.column_names);

    const Eigen::Index n = d.X.rows();
    const Eigen::Index k = d.X.cols();
    const Eigen::Index kb = k * B;

    // Category index per row: -1 for the reference.
    std::vector<int> block_of(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = static_cast<int>(d.y[i]);
        for (Eigen::Index b = 0; b < B; ++b) {
            if (cats[static_cast<std::size_t>(b)] == c) {
                block_of[static_cast<std::size_t>(i)] = static_cast<int>(b);
            }
        }
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(kb);
    Eigen::MatrixXd probs(n, B);

    auto evaluate = [&](const Eigen::VectorXd& params, bool need_derivatives, Likelihood& out) {
        Eigen::MatrixXd eta(n, B);
        for (Eigen::Index b = 0; b < B; ++b) {
            eta.col(b) = d.X * params.segment(b * k, k);
        }
        out.max_abs_eta = eta.cwiseAbs().maxCoeff();
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double denom = 1.0;
            for (Eigen::Index b = 0; b < B; ++b) {
                denom += std::exp(std::clamp(eta(i, b), -35.0, 35.0));
            }
            for (Eigen::Index b = 0; b < B; ++b) {
                probs(i, b) = std::exp(std::clamp(eta(i, b), -35.0, 35.0)) / denom;
            }
            const int blk = block_of[static_cast<std::size_t>(i)];
            ll += (blk >= 0 ? std::clamp(eta(i, blk), -35.0, 35.0) : 0.0) - std::log(denom);
        }
        out.value = ll;
        if (!need_derivatives) return;
        out.score.resize(kb);
        for (Eigen::Index b = 0; b < B; ++b) {
            Eigen::VectorXd indicator = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (block_of[static_cast<std::size_t>(i)] == static_cast<int>(b)) {
                    indicator[i] = 1.0;
                }
            }
            out.score.segment(b * k, k) = d.X.transpose() * (indicator - probs.col(b));
        }
        out.hessian = Eigen::MatrixXd::Zero(kb, kb);
        for (Eigen::Index b = 0; b < B; ++b) {
            for (Eigen::Index c = b; c < B; ++c) {
                Eigen::VectorXd w(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double pb = probs(i, b);
                    const double pc = probs(i, c);
                    w[i] = b == c ? std::max(pb * (1.0 - pb), 1e-12) : -pb * pc;
                }
                const Eigen::MatrixXd blockmat = d.X.transpose() * w.asDiagonal() * d.X;
                out.hessian.block(b * k, c * k, k, k) = blockmat;
                if (b != c) out.hessian.block(c * k, b * k, k, k) = blockmat.transpose();
            }
        }
    };

    Likelihood cur;
    evaluate(theta, true, cur);
    bool converged = false;
    std::string note;
    for (int iter = 0; iter < kMaxNewtonIter; ++iter) {
        if (cur.score.cwiseAbs().maxCoeff() < kScoreTol) {
            converged = true;
            break;
        }
        const Eigen::VectorXd step = cur.hessian.ldlt().solve(cur.score);
        double lambda = 1.0;
        Eigen::VectorXd candidate;
        Likelihood next;
        int halvings = 0;
        const double noise = 1e-12 * (std::abs(cur.value) + 1.0);
        while (true) {
            candidate = theta + lambda * step;
            evaluate(candidate, false, next);
            if (next.value >= cur.value - noise || halvings >= kMaxHalvings) break;
            lambda /= 2.0;
            ++halvings;
        }
        const double rel_change =
            std::abs(next.value - cur.value) / (std::abs(cur.value) + 1.0);
        theta = candidate;
        evaluate(theta, true, cur);
        if (cur.max_abs_eta > kEtaGuard || theta.cwiseAbs().maxCoeff() > kBetaGuard) {
            note = "separation suspected: diverging coefficients";
            break;
        }
        if (rel_change < kLogLikRelTol) {
            converged = cur.score.cwiseAbs().maxCoeff() < 1e-6;
            if (converged) break;
        }
    }
    if (!converged && note.empty()) {
        converged = cur.score.cwiseAbs().maxCoeff() < 1e-6;
        if (!converged) note = "did not converge";
    }

    res.converged = converged;
    res.note = note;
    if (!converged) return res;

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.hessian);
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(kb, kb));
    for (Eigen::Index b = 0; b < B; ++b) {
        std::vector<Coefficient> block;
        for (Eigen::Index j = 0; j < k; ++j) {
            Coefficient c;
            c.name = d.column_names[static_cast<std::size_t>(j)];
            const Eigen::Index idx = b * k + j;
            c.estimate = theta[idx];
            c.se = std::sqrt(std::max(cov(idx, idx), 0.0));
            c.p = c.se > 0 ? normal_pvalue(theta[idx] / c.se) : kNaN;
            block.push_back(std::move(c));
        }
        res.blocks.emplace_back(cats[static_cast<std::size_t>(b)], std::move(block));
    }
    res.loglik = cur.value;
    res.aic = 2.0 * static_cast<double>(kb) - 2.0 * cur.value;

    std::vector<Eigen::Index> tested;
    for (Eigen::Index b = 0; b < B; ++b) {
        for (Eigen::Index j = 0; j < k; ++j) {
            if (d.column_names[static_cast<std::size_t>(j)] != "intercept") {
                tested.push_back(b * k + j);
            }
        }
    }
    if (!tested.empty()) {
        Eigen::MatrixXd cov_ss(tested.size(), tested.size());
        Eigen::VectorXd b_s(tested.size());
        for (std::size_t a = 0; a < tested.size(); ++a) {
            b_s[static_cast<Eigen::Index>(a)] = theta[tested[a]];
            for (std::size_t c = 0; c < tested.size(); ++c) {
                cov_ss(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
                    cov(tested[a], tested[c]);
            }
        }
        res.wald = b_s.dot(cov_ss.ldlt().solve(b_s));
    }
    return res;
}

const Coefficient* RegressionResult::find(const std::string& name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

const Coefficient* RegressionResult::find(int block_category, const std::string& name) const {
    for (const auto& [cat, block] : blocks) {
        if (cat != block_category) continue;
        for (const auto& c : block) {
            if (c.name == name) return &c;
        }
    }
    return nullptr;
}

std::string regression_to_csv(const RegressionResult& result) {
    std::ostringstream out;
    out << "kind,block,name,estimate,se,p\n";
    auto stat = [&](const std::string& name, const std::string& value) {
        out << "stat,," << name << "," << value << ",,\n";
    };
    stat("model", result.model);
    stat("dv", result.dv);
    stat("fe", fe_to_string(result.fe));
    stat("n", std::to_string(result.n));
    stat("converged", result.converged ? "1" : "0");
    if (!std::isnan(result.r2)) stat("r2", format_double(result.r2));
    if (!std::isnan(result.aic)) stat("aic", format_double(result.aic));
    if (!std::isnan(result.wald)) stat("wald", format_double(result.wald));
    if (!std::isnan(result.loglik)) stat("loglik", format_double(result.loglik));
    if (!result.note.empty()) stat("note", csv_escape(result.note));
    for (const auto& c : result.coefficients) {
        out << "coef,," << csv_escape(c.name) << "," << format_double(c.estimate) << ","
            << format_double(c.se) << "," << format_double(c.p) << "\n";
    }
    for (const auto& [cat, block] : result.blocks) {
        for (const auto& c : block) {
            out << "coef," << cat << "," << csv_escape(c.name) << ","
                << format_double(c.estimate) << "," << format_double(c.se) << ","
                << format_double(c.p) << "\n";
        }
    }
    return std::move(out).str();
}

RegressionResult regression_from_csv(const std::string& csv) {
    const CsvTable table = parse_csv(csv);
    RegressionResult res;
    const std::size_t c_kind = table.column("kind");
    const std::size_t c_block = table.column("block");
    const std::size_t c_name = table.column("name");
    const std::size_t c_est = table.column("estimate");
    const std::size_t c_se = table.column("se");
    const std::size_t c_p = table.column("p");
    std::map<int, std::vector<Coefficient>> blocks;
    for (const auto& row : table.rows) {
        if (row.at(c_kind) == "stat") {
            const std::string& name = row.at(c_name);
            const std::string& value = row.at(c_est);
            if (name == "model") res.model = value;
            else if (name == "dv") res.dv = value;
            else if (name == "fe") res.fe = fe_from_string(value);
            else if (name == "n") res.n = std::stoll(value);
            else if (name == "converged") res.converged = value == "1";
            else if (name == "r2") res.r2 = parse_double_cell(value);
            else if (name == "aic") res.aic = parse_double_cell(value);
            else if (name == "wald") res.wald = parse_double_cell(value);
            else if (name == "loglik") res.loglik = parse_double_cell(value);
            else if (name == "note") res.note = value;
        } else if (row.at(c_kind) == "coef") {
            Coefficient c;
            c.name = row.at(c_name);
            c.estimate = parse_double_cell(row.at(c_est));
            c.se = parse_double_cell(row.at(c_se));
            c.p = parse_double_cell(row.at(c_p));
            if (row.at(c_block).empty()) {
                res.coefficients.push_back(std::move(c));
            } else {
                blocks[std::stoi(row.at(c_block))].push_back(std::move(c));
            }
        }
    }
    for (auto& [cat, block] : blocks) res.blocks.emplace_back(cat, std::move(block));
    return res;
}

std::string descriptives_to_csv(const Descriptives& d) {
    std::ostringstream out;
    out << "variable,n,mean,sd\n";
    for (std::size_t i = 0; i < d.variables.size(); ++i) {
        out << csv_escape(d.variables[i]) << "," << d.n[i] << "," << format_double(d.mean[i])
            << "," << format_double(d.sd[i]) << "\n";
    }
    return std::move(out).str();
}

std::string correlations_to_csv(const Descriptives& d) {
    std::ostringstream out;
    out << "var_a,var_b,r,p,n\n";
    for (std::size_t i = 0; i < d.variables.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            out << csv_escape(d.variables[i]) << "," << csv_escape(d.variables[j]) << ","
                << format_double(d.r[i][j]) << "," << format_double(d.p[i][j]) << ","
                << d.pair_n[i][j] << "\n";
        }
    }
    return std::move(out).str();
}

Descriptives descriptives_from_csv(const std::string& descriptives_csv,
                                   const std::string& correlations_csv) {
    Descriptives d;
    const CsvTable desc = parse_csv(descriptives_csv);
    const std::size_t c_var = desc.column("variable");
    const std::size_t c_n = desc.column("n");
    const std::size_t c_mean = desc.column("mean");
    const std::size_t c_sd = desc.column("sd");
    for (const auto& row : desc.rows) {
        d.variables.push_back(row.at(c_var));
        d.n.push_back(std::stoll(row.at(c_n)));
        d.mean.push_back(parse_double_cell(row.at(c_mean)));
        d.sd.push_back(parse_double_cell(row.at(c_sd)));
    }
    const std::size_t k = d.variables.size();
    d.r.assign(k, std::vector<double>(k, kNaN));
    d.p.assign(k, std::vector<double>(k, kNaN));
    d.pair_n.assign(k, std::vector<long long>(k, 0));
    auto var_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < k; ++i) {
            if (d.variables[i] == name) return i;
        }
        throw std::runtime_error("correlations reference unknown variable: " + name);
    };
    const CsvTable corr = parse_csv(correlations_csv);
    const std::size_t k_a = corr.column("var_a");
    const std::size_t k_b = corr.column("var_b");
    const std::size_t k_r = corr.column("r");
    const std::size_t k_p = corr.column("p");
    const std::size_t k_n = corr.column("n");
    for (const auto& row : corr.rows) {
        const std::size_t i = var_index(row.at(k_a));
        const std::size_t j = var_index(row.at(k_b));
        d.r[i][j] = d.r[j][i] = parse_double_cell(row.at(k_r));
        d.p[i][j] = d.p[j][i] = parse_double_cell(row.at(k_p));
        d.pair_n[i][j] = d.pair_n[j][i] = std::stoll(row.at(k_n));
    }
    return d;
}

}  // namespace recomb
