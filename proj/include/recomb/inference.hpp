#pragma once

// The regression battery: descriptives with pairwise correlations, OLS with
// absorbed fixed effects, binary logistic regression, and multinomial
// logistic regression with a reference category. Classical (non-robust)
// standard errors throughout; Wald is the joint chi-square on all
// non-intercept coefficients.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recomb/covariates.hpp"

namespace recomb {

enum class FixedEffects { none, field, field_year };

struct ModelSpec {
    std::string dv;
    std::vector<std::string> covariates;
    FixedEffects fe = FixedEffects::none;
    // Comma-separated clauses, each `field=CODE[|CODE...]` or
    // `year=YYYY[|YYYY...]`; empty keeps every row.
    std::string subset;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double p = 1.0;
};

struct RegressionResult {
    std::string model;  // "ols" | "logit" | "mnlogit"
    std::string dv;
    FixedEffects fe = FixedEffects::none;
    std::vector<Coefficient> coefficients;  // ols / logit (empty if unconverged)
    // mnlogit: one coefficient block per non-reference category, ascending.
    std::vector<std::pair<int, std::vector<Coefficient>>> blocks;
    long long n = 0;
    double r2 = std::numeric_limits<double>::quiet_NaN();
    double aic = std::numeric_limits<double>::quiet_NaN();
    double wald = std::numeric_limits<double>::quiet_NaN();
    double loglik = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
    std::string note;

    const Coefficient* find(const std::string& name) const;
    const Coefficient* find(int block_category, const std::string& name) const;
};

struct Descriptives {
    std::vector<std::string> variables;
    std::vector<long long> n;
    std::vector<double> mean;
    std::vector<double> sd;  // sample convention
    // Pairwise-complete Pearson r and two-sided p (t transform, n-2 df);
    // NaN r marks an undefined correlation (zero variance).
    std::vector<std::vector<double>> r;
    std::vector<std::vector<double>> p;
    std::vector<std::vector<long long>> pair_n;
};

Descriptives describe(const AnalysisTable& table, std::span<const std::string> variables);

RegressionResult ols(const AnalysisTable& table, const ModelSpec& spec);
RegressionResult logit(const AnalysisTable& table, const ModelSpec& spec);
RegressionResult mnlogit(const AnalysisTable& table, const ModelSpec& spec,
                         int reference_category = 4);

// Artifact round-trip: kind,block,name,estimate,se,p rows plus stat rows.
std::string regression_to_csv(const RegressionResult& result);
RegressionResult regression_from_csv(const std::string& csv);

std::string descriptives_to_csv(const Descriptives& d);
std::string correlations_to_csv(const Descriptives& d);
Descriptives descriptives_from_csv(const std::string& descriptives_csv,
                                   const std::string& correlations_csv);

std::string fe_to_string(FixedEffects fe);
FixedEffects fe_from_string(const std::string& name);

// Row mask for a subset expression; throws on malformed clauses or when no
// row satisfies the filter.
std::vector<bool> subset_mask(const AnalysisTable& table, const std::string& subset);

}  // namespace recomb
