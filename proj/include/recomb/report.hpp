#pragma once

// Renders regression artifacts into aligned markdown tables. The renderer
// only reformats numbers that already live in CSV artifacts; it never
// recomputes a statistic.

#include <string>
#include <vector>

#include "recomb/inference.hpp"

namespace recomb {

// "" / * / ** / *** at the p<.05 / p<.01 / p<.001 thresholds.
std::string significance_stars(double p);

std::string render_descriptives_table(const std::string& title, const Descriptives& d);

// One column per (label, result). OLS/logit results render one row per
// coefficient; multinomial results render one row per coefficient x category.
// Fixed-effect indicator columns are summarized by the Field/Year rows.
std::string render_regression_table(
    const std::string& title,
    const std::vector<std::pair<std::string, RegressionResult>>& columns);

}  // namespace recomb
