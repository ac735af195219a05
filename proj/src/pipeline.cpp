#include "mixlaw/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mixlaw {

namespace {

std::string describe(const Mixture& m) {
    std::ostringstream os;
    os << '[';
    for (std::size_t j = 0; j < m.size(); ++j) os << (j ? ", " : "") << m[j];
    os << ']';
    return os.str();
}

// Rethrows a fitting error with the stage it came from.
template <class F>
auto in_stage(const std::string& context, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), context + ": " + e.what(), e.rule());
    }
}

// Flags stages whose residuals all share one sign.
void check_bias(const std::string& chain, const std::string& stage, std::span<const double> residuals,
                std::vector<std::string>& warnings) {
    if (residuals.size() < 2) return;
    const bool all_low = std::all_of(residuals.begin(), residuals.end(), [](double r) { return r < 0.0; });
    const bool all_high = std::all_of(residuals.begin(), residuals.end(), [](double r) { return r > 0.0; });
    if (all_low || all_high) {
        warnings.push_back("chain '" + chain + "', " + stage + " stage: every residual is " +
                           (all_low ? "negative (predictions underestimate observed loss)" : "positive") +
                           "; extrapolations may be biased");
    }
}

}  // namespace

void PipelineConfig::validate() const {
    // A 3-parameter size law needs one more distinct size than parameters.
    if (sizes.size() < 4) fail(ErrorKind::InvalidArgument, "pipeline: at least 4 model sizes are required", "sizes_count");
    if (std::set<double>(sizes.begin(), sizes.end()).size() != sizes.size()) {
        fail(ErrorKind::InvalidArgument, "pipeline: model sizes must be distinct", "sizes_distinct");
    }
    for (double n : sizes) {
        if (!(n >= 1.0) || !std::isfinite(n)) fail(ErrorKind::InvalidArgument, "pipeline: sizes must be >= 1", "sizes_positive");
    }
    if (S0 < 1) fail(ErrorKind::InvalidArgument, "pipeline: S0 must be >= 1", "s0_positive");
    if (S_target <= S0) fail(ErrorKind::InvalidArgument, "pipeline: S_target must exceed S0", "s_target_gt_s0");
    if (!(N_target > *std::max_element(sizes.begin(), sizes.end()))) {
        fail(ErrorKind::InvalidArgument, "pipeline: N_target must exceed every small size", "n_target_gt_sizes");
    }
    if (min_fit_step < 1) fail(ErrorKind::InvalidArgument, "pipeline: min_fit_step must be >= 1", "min_fit_step_positive");
    fit_config.validate();
}

Prediction PipelineChain::evaluate(std::span<const double> r) const {
    if (mixing) return eval_model(mixing->model, r);
    if (boosted_mixing) return eval_model(boosted_mixing->model, r);
    fail(ErrorKind::InvalidArgument, "pipeline chain '" + name + "' has no mixing law");
}

double PipelineChain::mixing_train_mae() const {
    if (mixing) return mixing->train_mae;
    if (boosted_mixing) return boosted_mixing->train_mae;
    return 0.0;
}

const PipelineChain* PipelinePrediction::chain(const std::string& name) const {
    for (const auto& c : chains) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

PipelinePrediction run_pipeline(std::span<const RunRecord> records, std::span<const Mixture> targets,
                                const PipelineConfig& config) {
    config.validate();
    if (records.empty()) fail(ErrorKind::Coverage, "pipeline: no records");

    PipelinePrediction out;
    out.training_domains = records.front().mixture.domain_names();

    // Group by (mixture, size); keep mixtures in first-seen order.
    std::map<std::vector<double>, std::size_t> mixture_index;
    std::set<std::string> domain_names;
    bool have_overall = true;
    const std::set<double> sizes(config.sizes.begin(), config.sizes.end());
    std::map<std::pair<std::size_t, double>, std::vector<const RunRecord*>> cells;
    for (const auto& rec : records) {
        if (rec.mixture.domain_names() != out.training_domains) {
            fail(ErrorKind::DimensionMismatch, "pipeline: run " + rec.run_id + " uses different training domains");
        }
        if (!sizes.contains(rec.model_size)) continue;
        if (rec.step < config.min_fit_step || rec.step > config.S0) continue;
        const std::vector<double> key(rec.mixture.proportions().begin(), rec.mixture.proportions().end());
        auto [it, inserted] = mixture_index.emplace(key, out.mixtures.size());
        if (inserted) out.mixtures.push_back(rec.mixture);
        cells[{it->second, rec.model_size}].push_back(&rec);
        for (const auto& [name, _] : rec.domain_losses) domain_names.insert(name);
        have_overall = have_overall && rec.overall_loss.has_value();
    }
    if (out.mixtures.empty()) {
        fail(ErrorKind::Coverage, "pipeline: no records at the configured sizes within [min_fit_step, S0]");
    }

    std::vector<std::string> missing;
    for (std::size_t i = 0; i < out.mixtures.size(); ++i) {
        for (double n : config.sizes) {
            const auto it = cells.find({i, n});
            std::set<std::int64_t> steps;
            if (it != cells.end()) {
                for (const auto* rec : it->second) steps.insert(rec->step);
            }
            if (steps.size() < 4) {
                std::ostringstream os;
                os << "(mixture " << describe(out.mixtures[i]) << ", size " << n << ": " << steps.size()
                   << " distinct steps)";
                missing.push_back(os.str());
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "pipeline: cells lack 4 distinct steps in [min_fit_step, S0]: ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
        fail(ErrorKind::Coverage, msg);
    }

    std::vector<std::string> chain_names(domain_names.begin(), domain_names.end());
    if (have_overall) chain_names.push_back(kOverallChain);
    if (chain_names.empty()) fail(ErrorKind::Coverage, "pipeline: records carry no losses");

    const auto loss_of = [](const RunRecord& rec, const std::string& chain) -> std::optional<double> {
        if (chain == kOverallChain) return rec.overall_loss;
        const auto it = rec.domain_losses.find(chain);
        if (it == rec.domain_losses.end()) return std::nullopt;
        return it->second;
    };

    for (const auto& name : chain_names) {
        PipelineChain chain;
        chain.name = name;
        std::vector<double> step_resid, size_resid;
        std::vector<MixtureSample> target_samples;

        for (std::size_t i = 0; i < out.mixtures.size(); ++i) {
            std::vector<PowerPoint> size_points;
            for (double n : config.sizes) {
                const auto& runs = cells.at({i, n});
                std::vector<PowerPoint> points;
                for (const auto* rec : runs) {
                    const auto loss = loss_of(*rec, name);
                    if (!loss) {
                        fail(ErrorKind::Coverage, "pipeline: run " + rec->run_id + " lacks a loss for chain '" + name + "'");
                    }
                    points.push_back({static_cast<double>(rec->step), *loss});
                }
                std::ostringstream ctx;
                ctx << "step law (chain " << name << ", mixture " << describe(out.mixtures[i]) << ", size " << n << ")";
                auto fit = in_stage(ctx.str(), [&] { return fit_power_law(points, config.fit_config); });
                for (const auto& p : points) step_resid.push_back(eval_power_law(fit.model, p.x) - p.loss);
                const double at_s = eval_power_law(fit.model, static_cast<double>(config.S_target));
                size_points.push_back({n, at_s});
                chain.step_laws.push_back({i, n, std::move(fit), at_s});
            }
            std::ostringstream ctx;
            ctx << "size law (chain " << name << ", mixture " << describe(out.mixtures[i]) << ")";
            auto fit = in_stage(ctx.str(), [&] { return fit_power_law(size_points, config.fit_config); });
            for (const auto& p : size_points) size_resid.push_back(eval_power_law(fit.model, p.x) - p.loss);
            const double at_target = eval_power_law(fit.model, config.N_target);
            target_samples.push_back({out.mixtures[i], at_target});
            chain.size_laws.push_back({i, std::move(fit), at_target});
        }

        const std::string ctx = "mixing law (chain " + name + ")";
        std::vector<double> mix_resid;
        if (name == kOverallChain) {
            if (config.boosted) {
                chain.boosted_mixing = in_stage(ctx, [&] { return fit_boosted(target_samples, config.fit_config); });
            } else {
                chain.mixing = in_stage(ctx, [&] { return fit_implicit(target_samples, config.fit_config); });
            }
        } else {
            chain.mixing = in_stage(ctx, [&] { return fit_explicit(target_samples, Form::M4, config.fit_config, name); });
        }
        for (const auto& s : target_samples) mix_resid.push_back(chain.evaluate(s.mixture.proportions()).overall - s.loss);

        check_bias(name, "step-law", step_resid, out.warnings);
        check_bias(name, "size-law", size_resid, out.warnings);
        check_bias(name, "mixing-law", mix_resid, out.warnings);
        out.chains.push_back(std::move(chain));
    }

    out.targets.assign(targets.begin(), targets.end());
    for (const auto& t : out.targets) out.predicted.push_back(predict(out, t));
    return out;
}

PipelineOutput predict(const PipelinePrediction& prediction, std::span<const double> r) {
    if (r.size() != prediction.dims()) {
        fail(ErrorKind::DimensionMismatch,
             "pipeline predict: expected " + std::to_string(prediction.dims()) + " proportions, got " +
                 std::to_string(r.size()),
             "dimension");
    }
    PipelineOutput out;
    for (const auto& chain : prediction.chains) {
        const double v = chain.evaluate(r).overall;
        if (chain.name == kOverallChain) out.overall = v;
        else out.per_domain[chain.name] = v;
    }
    return out;
}

PipelineOutput predict(const PipelinePrediction& prediction, const Mixture& r) {
    return predict(prediction, r.proportions());
}

}  // namespace mixlaw
