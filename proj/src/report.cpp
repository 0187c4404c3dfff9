#include "recomb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace recomb {

namespace {

std::string fixed(double v, int digits) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string estimate_cell(const Coefficient& c) {
    std::string out = fixed(c.estimate, 3) + significance_stars(c.p);
    out += " (" + fixed(c.se, 3) + ")";
    return out;
}

std::string category_label(int category) {
    switch (category) {
        case 1: return "1 - (HN, HC)";
        case 2: return "2 - (HN, LC)";
        case 3: return "3 - (LN, HC)";
        case 4: return "4 - (LN, LC)";
    }
    return std::to_string(category);
}

bool is_fe_dummy(const std::string& name) {
    return name.rfind("field:", 0) == 0 || name.rfind("year:", 0) == 0;
}

std::string render_rows(const std::string& title,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    auto emit = [&](std::ostringstream& out, const std::vector<std::string>& row) {
        out << "|";
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& cell = c < row.size() ? row[c] : std::string();
            out << " " << cell << std::string(width[c] - cell.size(), ' ') << " |";
        }
        out << "\n";
    };
    std::ostringstream out;
    if (!title.empty()) out << title << "\n\n";
    emit(out, header);
    out << "|";
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << std::string(width[c] + 2, '-') << "|";
    }
    out << "\n";
    for (const auto& row : rows) emit(out, row);
    return std::move(out).str();
}

}  // namespace

std::string significance_stars(double p) {
    if (std::isnan(p)) return "";
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

std::string render_descriptives_table(const std::string& title, const Descriptives& d) {
    const std::size_t k = d.variables.size();
    std::vector<std::string> header = {"Variable", "N", "Mean", "Std Dev"};
    for (std::size_t j = 0; j + 1 < k; ++j) header.push_back(std::to_string(j + 1));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<std::string> row;
        row.push_back(std::to_string(i + 1) + "- " + d.variables[i]);
        row.push_back(std::to_string(d.n[i]));
        row.push_back(fixed(d.mean[i], 3));
        row.push_back(fixed(d.sd[i], 3));
        for (std::size_t j = 0; j + 1 < k; ++j) {
            if (j > i) {
                row.push_back("");
            } else if (j == i) {
                row.push_back("1");
            } else {
                row.push_back(fixed(d.r[i][j], 3));
            }
        }
        rows.push_back(std::move(row));
    }
    return render_rows(title, header, rows);
}

std::string render_regression_table(
    const std::string& title,
    const std::vector<std::pair<std::string, RegressionResult>>& columns) {
    std::vector<std::string> header = {"", ""};
    for (const auto& [label, result] : columns) header.push_back(label);

    // Row skeleton from the union of coefficient names, first-seen order,
    // fixed-effect dummies excluded.
    std::vector<std::string> names;
    std::vector<int> categories;
    bool any_blocks = false;
    for (const auto& [label, result] : columns) {
        for (const auto& c : result.coefficients) {
            if (is_fe_dummy(c.name)) continue;
            if (std::find(names.begin(), names.end(), c.name) == names.end()) {
                names.push_back(c.name);
            }
        }
        for (const auto& [cat, block] : result.blocks) {
            any_blocks = true;
            if (std::find(categories.begin(), categories.end(), cat) == categories.end()) {
                categories.push_back(cat);
            }
            for (const auto& c : block) {
                if (is_fe_dummy(c.name)) continue;
                if (std::find(names.begin(), names.end(), c.name) == names.end()) {
                    names.push_back(c.name);
                }
            }
        }
    }
    std::sort(categories.begin(), categories.end());

    std::vector<std::vector<std::string>> rows;
    auto coef_rows = [&](const std::string& name) {
        if (!any_blocks) {
            std::vector<std::string> row = {name, ""};
            for (const auto& [label, result] : columns) {
                const Coefficient* c = result.converged ? result.find(name) : nullptr;
                row.push_back(c ? estimate_cell(*c) : (result.converged ? "" : "n/c"));
            }
            rows.push_back(std::move(row));
            return;
        }
        bool first = true;
        for (const int cat : categories) {
            std::vector<std::string> row = {first ? name : "", category_label(cat)};
            first = false;
            for (const auto& [label, result] : columns) {
                const Coefficient* c = result.converged ? result.find(cat, name) : nullptr;
                row.push_back(c ? estimate_cell(*c) : (result.converged ? "" : "n/c"));
            }
            rows.push_back(std::move(row));
        }
    };
    for (const auto& name : names) {
        if (any_blocks && name == "intercept") continue;  // keeps the table compact
        coef_rows(name);
    }

    auto stat_row = [&](const std::string& label, auto getter) {
        std::vector<std::string> row = {label, ""};
        bool any = false;
        for (const auto& [col_label, result] : columns) {
            std::string cell = getter(result);
            if (!cell.empty()) any = true;
            row.push_back(std::move(cell));
        }
        if (any) rows.push_back(std::move(row));
    };
    stat_row("Field", [](const RegressionResult& r) -> std::string {
        return r.fe == FixedEffects::none ? "n/a" : "Fixed";
    });
    stat_row("Year", [](const RegressionResult& r) -> std::string {
        return r.fe == FixedEffects::field_year ? "Fixed" : "";
    });
    stat_row("N", [](const RegressionResult& r) { return std::to_string(r.n); });
    stat_row("R2", [](const RegressionResult& r) { return fixed(r.r2, 3); });
    stat_row("AIC", [](const RegressionResult& r) { return fixed(r.aic, 1); });
    stat_row("Wald", [](const RegressionResult& r) { return fixed(r.wald, 2); });
    stat_row("Converged", [](const RegressionResult& r) -> std::string {
        return r.converged ? "yes" : "no (" + r.note + ")";
    });

    std::string table = render_rows(title, header, rows);
    table += "\nNotes: p<.05*, p<.01**, p<.001***; standard errors in parentheses.\n";
    return table;
}

}  // namespace recomb
