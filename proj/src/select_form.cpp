#include <algorithm>
#include <cmath>
#include <set>

#include "mixlaw/fit.hpp"

namespace mixlaw {

FormSelection select_form(std::span<const MixtureSample> fit, std::span<const MixtureSample> val,
                          const FitConfig& config) {
    if (fit.empty() || val.empty()) fail(ErrorKind::InvalidArgument, "select-form: fitting and validation splits must be nonempty");
    config.validate();

    FormSelection out;
    const auto [lo, hi] = std::minmax_element(fit.begin(), fit.end(),
                                              [](const auto& a, const auto& b) { return a.loss < b.loss; });
    const double midpoint = 0.5 * (lo->loss + hi->loss);
    const auto baseline = [midpoint](std::span<const MixtureSample> rows) {
        double total = 0.0;
        for (const auto& s : rows) total += std::abs(midpoint - s.loss);
        return total / static_cast<double>(rows.size());
    };
    out.baseline_train_mae = baseline(fit);
    out.baseline_val_mae = baseline(val);

    for (Form form : {Form::M1, Form::M2, Form::M3, Form::M4}) {
        FormScore score;
        score.form = form;
        try {
            auto report = fit_explicit(fit, form, config);
            score.train_mae = report.train_mae;
            score.val_mae = mean_absolute_error(report.model, val);
            score.model = std::move(report.model);
        } catch (const Error& e) {
            score.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
        out.forms.push_back(std::move(score));
    }
    return out;
}

FormSelection select_form(std::span<const RunRecord> records, const std::string& target_domain,
                          std::span<const std::string> fit_ids, std::span<const std::string> val_ids,
                          const FitConfig& config) {
    const std::set<std::string> fit_set(fit_ids.begin(), fit_ids.end());
    const std::set<std::string> val_set(val_ids.begin(), val_ids.end());
    for (const auto& id : fit_set) {
        if (val_set.contains(id)) fail(ErrorKind::InvalidArgument, "select-form: run '" + id + "' is in both splits");
    }
    std::vector<RunRecord> fit_rows, val_rows;
    for (const auto& rec : records) {
        if (fit_set.contains(rec.run_id)) fit_rows.push_back(rec);
        else if (val_set.contains(rec.run_id)) val_rows.push_back(rec);
    }
    const auto fit = samples_for(fit_rows, target_domain);
    const auto val = samples_for(val_rows, target_domain);
    return select_form(fit, val, config);
}

}  // namespace mixlaw
