// mixlaw: command-line front end for fitting, designing and using data
// mixing laws. Run `mixlaw --help` or `mixlaw <command> --help`.

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "mixlaw/design.hpp"
#include "mixlaw/fit.hpp"
#include "mixlaw/io.hpp"
#include "mixlaw/optimize.hpp"
#include "mixlaw/pipeline.hpp"
#include "mixlaw/serve.hpp"

using namespace mixlaw;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 2 usage, 10 + ErrorKind for library failures, 1 other.
constexpr int kUsageExit = 2;

struct FitOptions {
    int restarts = FitConfig{}.restarts;
    int max_iters = FitConfig{}.max_iters;
    double tol = FitConfig{}.tol;
    double huber_delta = FitConfig{}.huber_delta;
    int K = FitConfig{}.K;
    int boost_stages = FitConfig{}.boost_stages;

    FitConfig config(std::uint64_t seed) const {
        return {restarts, max_iters, tol, huber_delta, seed, K, boost_stages};
    }
    json to_json() const {
        return {{"restarts", restarts}, {"max_iters", max_iters}, {"tol", tol},
                {"huber_delta", huber_delta}, {"K", K}, {"boost_stages", boost_stages}};
    }
};

void add_fit_options(CLI::App* cmd, FitOptions& o) {
    cmd->add_option("--restarts", o.restarts, "Multi-start initializations")->capture_default_str();
    cmd->add_option("--max-iters", o.max_iters, "Optimizer iteration cap")->capture_default_str();
    cmd->add_option("--tol", o.tol, "Relative objective-improvement threshold")->capture_default_str();
    cmd->add_option("--huber-delta", o.huber_delta, "Huber transition width (nats)")->capture_default_str();
    cmd->add_option("--K", o.K, "Implicit validation-domain count")->capture_default_str();
    cmd->add_option("--boost-stages", o.boost_stages, "AdaBoost stages")->capture_default_str();
}

void log_config(const std::string& command, std::uint64_t seed, const json& config) {
    std::cerr << "mixlaw " << command << " seed=" << seed << " config=" << config.dump() << '\n';
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out << text;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            fail(ErrorKind::Parse, "'" + cell + "' is not a number", "number_format");
        }
    }
    return out;
}

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(cell);
    }
    return out;
}

std::vector<double> proportions(const Mixture& m) { return {m.proportions().begin(), m.proportions().end()}; }

// One fitted point per distinct mixture.
template <class Model>
std::vector<FittedPoint> fitted_points(const Model& model, std::span<const MixtureSample> samples) {
    std::set<std::vector<double>> seen;
    std::vector<FittedPoint> out;
    for (const auto& s : samples) {
        auto r = proportions(s.mixture);
        if (!seen.insert(r).second) continue;
        out.push_back({r, eval_model(model, s.mixture).overall});
    }
    return out;
}

double display(double loss, bool perplexity) { return perplexity ? to_perplexity(loss) : loss; }

// --- fit ------------------------------------------------------------------------

struct FitCommand {
    std::string runs, val_runs, out, kind = "implicit", domain, form = "M4", x_column = "step", run_id;
    FitOptions fit;
};

int run_fit(const FitCommand& c, std::uint64_t seed) {
    const auto records = load_runs(c.runs);
    const auto config = c.fit.config(seed);
    json logged = c.fit.to_json();
    logged.update({{"kind", c.kind}, {"domain", c.domain}, {"form", c.form}, {"runs", c.runs}, {"val_runs", c.val_runs}});
    if (c.kind == "power") logged.update({{"x_column", c.x_column}, {"run_id", c.run_id}});
    log_config("fit", seed, logged);

    LawArtifact artifact;
    artifact.provenance.config = logged;
    artifact.provenance.seed = seed;
    artifact.provenance.data_digest = data_digest(records);

    if (c.kind == "power") {
        std::vector<PowerPoint> points;
        for (const auto& rec : records) {
            if (!c.run_id.empty() && rec.run_id != c.run_id) continue;
            double loss = 0.0;
            if (c.domain.empty()) {
                if (!rec.overall_loss) fail(ErrorKind::MissingDomain, "run " + rec.run_id + " has no overall loss");
                loss = *rec.overall_loss;
            } else {
                const auto it = rec.domain_losses.find(c.domain);
                if (it == rec.domain_losses.end()) fail(ErrorKind::MissingDomain, "run " + rec.run_id + " lacks domain " + c.domain);
                loss = it->second;
            }
            double x = 0.0;
            if (c.x_column == "step") x = static_cast<double>(rec.step);
            else if (c.x_column == "model_size") x = rec.model_size;
            else if (c.x_column == "tokens") x = static_cast<double>(rec.step) * static_cast<double>(rec.batch_tokens);
            else fail(ErrorKind::InvalidArgument, "--x must be step, model_size or tokens");
            points.push_back({x, loss});
        }
        const auto report = fit_power_law(points, config);
        artifact.model = report.model;
        artifact.provenance.stage_maes["train"] = report.train_mae;
        for (const auto& p : points) artifact.fitted.push_back({{p.x}, eval_power_law(report.model, p.x)});
        std::cerr << "power law: c=" << report.model.c << " k=" << report.model.k << " alpha=" << report.model.alpha
                  << " train_mae=" << report.train_mae << '\n';
    } else {
        const auto samples = samples_for(records, c.kind == "explicit" ? c.domain : std::string());
        std::vector<MixtureSample> val;
        if (!c.val_runs.empty()) val = samples_for(load_runs(c.val_runs), c.kind == "explicit" ? c.domain : std::string());
        double train = 0.0;
        std::optional<double> val_mae;
        if (c.kind == "explicit") {
            if (c.domain.empty()) fail(ErrorKind::InvalidArgument, "explicit fits need --domain");
            auto report = fit_explicit(samples, form_from_string(c.form), config, c.domain);
            train = report.train_mae;
            if (!val.empty()) val_mae = mean_absolute_error(report.model, val);
            artifact.fitted = fitted_points(report.model, samples);
            artifact.model = std::move(report.model);
        } else if (c.kind == "implicit") {
            auto report = fit_implicit(samples, config);
            train = report.train_mae;
            if (!val.empty()) val_mae = mean_absolute_error(report.model, val);
            artifact.fitted = fitted_points(report.model, samples);
            artifact.model = std::move(report.model);
        } else if (c.kind == "boosted") {
            auto report = fit_boosted(samples, config);
            train = report.train_mae;
            if (!val.empty()) val_mae = mean_absolute_error(report.model, val);
            artifact.fitted = fitted_points(report.model, samples);
            std::cerr << "ensemble members: " << report.model.members().size() << '\n';
            artifact.model = std::move(report.model);
        } else {
            fail(ErrorKind::InvalidArgument, "--kind must be explicit, implicit, boosted or power");
        }
        artifact.provenance.stage_maes["train"] = train;
        if (val_mae) artifact.provenance.stage_maes["val"] = *val_mae;
        std::cerr << c.kind << " fit: train_mae=" << train;
        if (val_mae) std::cerr << " val_mae=" << *val_mae;
        std::cerr << '\n';
    }
    write_output(c.out, serialize_artifact(artifact));
    return 0;
}

// --- select-form --------------------------------------------------------------------

struct SelectCommand {
    std::string runs, domain, fit_ids, val_ids;
    bool as_json = false;
    FitOptions fit;
};

int run_select(const SelectCommand& c, std::uint64_t seed) {
    const auto records = load_runs(c.runs);
    json logged = c.fit.to_json();
    logged.update({{"runs", c.runs}, {"domain", c.domain}, {"fit_ids", c.fit_ids}, {"val_ids", c.val_ids}});
    log_config("select-form", seed, logged);
    const auto fit_ids = split_ids(c.fit_ids);
    const auto val_ids = split_ids(c.val_ids);
    const auto table = select_form(records, c.domain, fit_ids, val_ids, c.fit.config(seed));

    json out = json::array();
    std::ostringstream text;
    text << "form      train_mae      val_mae\n";
    char line[160];
    for (const auto& f : table.forms) {
        json row{{"form", std::string(to_string(f.form))}};
        if (f.train_mae) {
            row["train_mae"] = *f.train_mae;
            row["val_mae"] = *f.val_mae;
            std::snprintf(line, sizeof line, "%-6s %12.6g %12.6g\n", std::string(to_string(f.form)).c_str(), *f.train_mae, *f.val_mae);
        } else {
            row["error"] = f.error;
            std::snprintf(line, sizeof line, "%-6s failed: %s\n", std::string(to_string(f.form)).c_str(), f.error.c_str());
        }
        text << line;
        out.push_back(row);
    }
    std::snprintf(line, sizeof line, "%-6s %12.6g %12.6g\n", "random", table.baseline_train_mae, table.baseline_val_mae);
    text << line;
    out.push_back({{"form", "random"}, {"train_mae", table.baseline_train_mae}, {"val_mae", table.baseline_val_mae}});
    std::cout << (c.as_json ? out.dump(2) + "\n" : text.str());
    return 0;
}

// --- design -----------------------------------------------------------------------------

struct DesignCommand {
    std::vector<double> r_max;
    double delta = 0.125;
    int N = 1;
    std::vector<std::string> domains;
    bool all = false;
    std::string out;
};

int run_design(const DesignCommand& c, std::uint64_t seed) {
    DesignSpace space{c.r_max, c.delta, c.N, c.domains};
    log_config("design", seed, {{"r_max", c.r_max}, {"delta", c.delta}, {"N", c.N}, {"domains", c.domains}, {"all", c.all}});
    if (c.all) {
        const auto cand = enumerate_candidates(space);
        std::cerr << "candidates: " << cand.zero.size() << " with a zero proportion, " << cand.nonzero.size() << " without\n";
        std::vector<Mixture> every(cand.zero);
        every.insert(every.end(), cand.nonzero.begin(), cand.nonzero.end());
        write_output(c.out, format_mixtures(every));
        return 0;
    }
    const auto result = sample_design(space, seed);
    std::size_t zeros = 0;
    for (const auto& m : result.sampled) zeros += m.has_zero() ? 1 : 0;
    std::cerr << "sampled " << result.sampled.size() << " of " << result.candidates_zero.size() + result.candidates_nonzero.size()
              << " candidates (" << zeros << " with a zero proportion)\n";
    write_output(c.out, format_mixtures(result.sampled));
    return 0;
}

// --- subset --------------------------------------------------------------------------------

struct SubsetCommand {
    std::string runs, domain;
    std::size_t size = 20;
    int resamples = 20;
    FitOptions fit;
};

int run_subset(const SubsetCommand& c, std::uint64_t seed) {
    const auto records = load_runs(c.runs);
    json logged = c.fit.to_json();
    logged.update({{"runs", c.runs}, {"domain", c.domain}, {"size", c.size}, {"resamples", c.resamples}});
    log_config("subset", seed, logged);
    const auto sel = select_fitting_subset(records, c.size, c.resamples, c.fit.config(seed), c.domain);
    json out{{"run_ids", sel.run_ids}, {"mae", sel.mae}, {"resample_maes", sel.resample_maes},
             {"failed_resamples", sel.failed_resamples}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

// --- pipeline ----------------------------------------------------------------------------------

struct PipelineCommand {
    std::string runs, targets, out;
    std::vector<std::string> target_list;
    std::vector<double> sizes;
    std::int64_t S0 = 0, S_target = 0, min_fit_step = 2000;
    double N_target = 0.0;
    bool boosted = false;
    FitOptions fit;
};

int run_pipeline_cmd(const PipelineCommand& c, std::uint64_t seed) {
    const auto records = load_runs(c.runs);
    json logged = c.fit.to_json();
    logged.update({{"runs", c.runs}, {"sizes", c.sizes}, {"S0", c.S0}, {"S_target", c.S_target}, {"N_target", c.N_target},
                   {"min_fit_step", c.min_fit_step}, {"boosted", c.boosted}, {"targets", c.targets},
                   {"target", c.target_list}});
    log_config("pipeline", seed, logged);

    std::vector<Mixture> targets;
    if (!c.targets.empty()) targets = load_mixtures(c.targets);
    for (const auto& t : c.target_list) {
        targets.push_back(Mixture::from(parse_list(t), records.empty() ? std::vector<std::string>{} : records.front().mixture.domain_names()));
    }
    PipelineConfig config{c.sizes, c.S0, c.S_target, c.N_target, c.min_fit_step, c.fit.config(seed), c.boosted};
    auto prediction = run_pipeline(records, targets, config);
    for (const auto& w : prediction.warnings) std::cerr << "warning: " << w << '\n';

    LawArtifact artifact;
    artifact.provenance.config = logged;
    artifact.provenance.seed = seed;
    artifact.provenance.data_digest = data_digest(records);
    for (const auto& chain : prediction.chains) {
        double step_mae = 0.0, size_mae = 0.0;
        for (const auto& s : chain.step_laws) step_mae += s.fit.train_mae;
        for (const auto& s : chain.size_laws) size_mae += s.fit.train_mae;
        artifact.provenance.stage_maes[chain.name + ".step"] = step_mae / static_cast<double>(chain.step_laws.size());
        artifact.provenance.stage_maes[chain.name + ".size"] = size_mae / static_cast<double>(chain.size_laws.size());
        artifact.provenance.stage_maes[chain.name + ".mixing"] = chain.mixing_train_mae();
        std::cerr << "chain " << chain.name << ": mixing train_mae=" << chain.mixing_train_mae() << '\n';
    }
    for (const auto& m : prediction.mixtures) {
        const auto p = predict(prediction, m);
        artifact.fitted.push_back({proportions(m), p.overall ? *p.overall : p.per_domain.begin()->second});
    }
    for (std::size_t i = 0; i < prediction.targets.size(); ++i) {
        const auto& p = prediction.predicted[i];
        json row{{"mixture", proportions(prediction.targets[i])}, {"per_domain", p.per_domain}};
        if (p.overall) row["overall"] = *p.overall;
        std::cerr << "target " << row.dump() << '\n';
    }
    artifact.model = std::move(prediction);
    write_output(c.out, serialize_artifact(artifact));
    return 0;
}

// --- optimize ------------------------------------------------------------------------------------

struct OptimizeCommand {
    std::string artifact, bounds, chain;
    double grid_step = 0.0;
    int refine_iters = OptimizeConfig{}.refine_iters;
    bool pareto = false;
    double pareto_step = 0.05;
    bool perplexity = false;
};

std::vector<std::pair<double, double>> parse_bounds(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    for (const auto& cell : split_ids(text)) {
        const auto colon = cell.find(':');
        if (colon == std::string::npos) fail(ErrorKind::Parse, "bounds take lo:hi pairs, got '" + cell + "'", "bounds_shape");
        const auto lo = parse_list(cell.substr(0, colon));
        const auto hi = parse_list(cell.substr(colon + 1));
        out.emplace_back(lo.at(0), hi.at(0));
    }
    return out;
}

// Per-domain laws of an artifact, for the Pareto report.
std::pair<std::vector<MixingLawModel>, std::vector<std::string>> domain_laws(const LawArtifact& a) {
    std::vector<MixingLawModel> laws;
    std::vector<std::string> names;
    if (const auto* p = std::get_if<PipelinePrediction>(&a.model)) {
        for (const auto& chain : p->chains) {
            if (chain.name == kOverallChain || !chain.mixing) continue;
            laws.push_back(chain.mixing->model);
            names.push_back(chain.name);
        }
    } else if (const auto* m = std::get_if<MixingLawModel>(&a.model)) {
        for (std::size_t i = 0; i < m->domain_count(); ++i) {
            laws.push_back(MixingLawModel::single(m->domain_laws()[i], m->training_domains(), m->validation_domains()[i]));
            names.push_back(m->validation_domains()[i]);
        }
    }
    if (laws.empty()) fail(ErrorKind::InvalidArgument, "pareto: artifact has no per-domain laws");
    return {laws, names};
}

int run_optimize(const OptimizeCommand& c, std::uint64_t seed) {
    const auto artifact = load_artifact(c.artifact);
    log_config("optimize", seed, {{"artifact", c.artifact}, {"grid_step", c.grid_step}, {"refine_iters", c.refine_iters},
                                  {"bounds", c.bounds}, {"chain", c.chain}, {"pareto", c.pareto}, {"pareto_step", c.pareto_step}});
    OptimizeConfig config;
    if (c.grid_step > 0.0) config.grid_step = c.grid_step;
    config.refine_iters = c.refine_iters;
    if (!c.bounds.empty()) config.bounds = parse_bounds(c.bounds);
    auto result = argmin_json(optimize_artifact(artifact, config, c.chain));
    if (c.perplexity) {
        result["loss"] = display(result["loss"].get<double>(), true);
        for (auto& v : result["per_domain"]) v = display(v.get<double>(), true);
        result["grid_loss"] = display(result["grid_loss"].get<double>(), true);
        result["units"] = "perplexity";
    }
    json out{{"argmin", result}};
    if (c.pareto) {
        const auto [laws, names] = domain_laws(artifact);
        const auto report = pareto_report(laws, names, c.pareto_step);
        json rows = json::array();
        for (const auto& row : report.rows) {
            json losses = json::array();
            for (double l : row.losses) losses.push_back(display(l, c.perplexity));
            rows.push_back({{"mixture", proportions(row.mixture)}, {"losses", losses}, {"non_dominated", row.non_dominated}});
        }
        out["pareto"] = {{"domains", report.domains}, {"rows", rows}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

// --- critical ---------------------------------------------------------------------------------------

struct CriticalCommand {
    std::optional<double> c, k, t;
    double L0 = 0.0;
    std::string artifact, target_domain;
    bool as_json = false;
};

int run_critical(const CriticalCommand& cmd, std::uint64_t seed) {
    log_config("critical", seed, {{"c", cmd.c ? json(*cmd.c) : json(nullptr)}, {"k", cmd.k ? json(*cmd.k) : json(nullptr)},
                                  {"t", cmd.t ? json(*cmd.t) : json(nullptr)}, {"L0", cmd.L0}, {"artifact", cmd.artifact},
                                  {"target_domain", cmd.target_domain}});
    double c = 0.0, k = 0.0, t = 0.0;
    if (!cmd.artifact.empty()) {
        // A fitted M4 law over two training domains, re-expressed in the
        // proportion r of the target domain: c + k e^{t_o} e^{(t_t - t_o) r}.
        const auto artifact = load_artifact(cmd.artifact);
        const auto* m = std::get_if<MixingLawModel>(&artifact.model);
        if (!m || m->domain_count() != 1 || m->dims() != 2) {
            fail(ErrorKind::InvalidArgument, "critical: artifact must hold a single-domain law over two training domains");
        }
        m->require_m4();
        const auto& names = m->training_domains();
        const std::size_t target = cmd.target_domain.empty() ? 1 : static_cast<std::size_t>(
            std::find(names.begin(), names.end(), cmd.target_domain) - names.begin());
        if (target >= 2) fail(ErrorKind::MissingDomain, "critical: unknown training domain '" + cmd.target_domain + "'");
        const auto& law = m->domain_laws().front();
        c = law.c;
        k = law.k[0] * std::exp(law.t[1 - target]);
        t = law.t[target] - law.t[1 - target];
    } else {
        if (!cmd.c || !cmd.k || !cmd.t) fail(ErrorKind::InvalidArgument, "critical: pass --c, --k and --t, or --artifact");
        c = *cmd.c;
        k = *cmd.k;
        t = *cmd.t;
    }
    const double r = critical_proportion(c, k, t, cmd.L0);
    if (cmd.as_json) {
        std::cout << json{{"critical_proportion", r}, {"c", c}, {"k", k}, {"t", t}, {"L0", cmd.L0}}.dump() << '\n';
    } else {
        std::ostringstream os;
        os.precision(12);
        os << r;
        std::cout << os.str() << '\n';
    }
    return 0;
}

// --- predict -------------------------------------------------------------------------------------------

struct PredictCommand {
    std::string artifact, mixtures;
    std::vector<std::string> mixture_list;
    std::vector<double> xs;
    bool perplexity = false;
};

int run_predict(const PredictCommand& c, std::uint64_t seed) {
    const auto artifact = load_artifact(c.artifact);
    log_config("predict", seed, {{"artifact", c.artifact}, {"mixtures", c.mixtures}, {"mixture", c.mixture_list},
                                 {"x", c.xs}, {"perplexity", c.perplexity}});
    if (artifact.kind() == "power") {
        if (c.xs.empty()) fail(ErrorKind::InvalidArgument, "predict: power-law artifacts need --x");
        for (double x : c.xs) std::cout << json{{"x", x}, {"loss", display(predict_power(artifact, x), c.perplexity)}}.dump() << '\n';
        return 0;
    }
    const auto names = artifact.training_domains();
    std::vector<std::vector<double>> inputs;
    if (!c.mixtures.empty()) {
        for (const auto& m : load_mixtures(c.mixtures)) {
            if (m.domain_names() != names) fail(ErrorKind::Schema, "predict: mixture columns do not match the artifact's domains", "dimension");
            inputs.push_back(proportions(m));
        }
    }
    for (const auto& text : c.mixture_list) inputs.push_back(mixture_from_json(json(parse_list(text)), names));
    if (inputs.empty()) fail(ErrorKind::InvalidArgument, "predict: pass --mixture or --mixtures");
    for (const auto& r : inputs) {
        auto out = prediction_json(predict_artifact(artifact, r));
        if (c.perplexity) {
            out["overall"] = display(out["overall"].get<double>(), true);
            for (auto& v : out["per_domain"]) v = display(v.get<double>(), true);
        }
        out["mixture"] = r;
        std::cout << out.dump() << '\n';
    }
    return 0;
}

// --- serve -----------------------------------------------------------------------------------------------

HttpServer* g_server = nullptr;

extern "C" void handle_signal(int) {
    if (g_server) g_server->stop();
}

int run_serve(const std::string& path, const std::string& host, int port, std::uint64_t seed) {
    log_config("serve", seed, {{"artifact", path}, {"host", host}, {"port", port}});
    HttpServer server(load_artifact(path));
    const int bound = server.bind(host, port);
    std::cerr << "listening on http://" << host << ":" << bound << '\n';
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    server.listen();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fit and use data mixing laws"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Random seed for every stochastic step")->capture_default_str();

    FitCommand fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a law and write a law artifact");
    fit_cmd->add_option("--runs", fit.runs, "Run table")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--kind", fit.kind, "explicit | implicit | boosted | power")
        ->check(CLI::IsMember({"explicit", "implicit", "boosted", "power"}))->capture_default_str();
    fit_cmd->add_option("--domain", fit.domain, "Validation domain (explicit; power: omit for overall loss)");
    fit_cmd->add_option("--form", fit.form, "M1 | M2 | M3 | M4 (explicit)")->check(CLI::IsMember({"M1", "M2", "M3", "M4"}))->capture_default_str();
    fit_cmd->add_option("--val-runs", fit.val_runs, "Held-out run table for val MAE")->check(CLI::ExistingFile);
    fit_cmd->add_option("--x", fit.x_column, "Power-law abscissa: step | model_size | tokens")->capture_default_str();
    fit_cmd->add_option("--run-id", fit.run_id, "Power law: use only this run's rows");
    fit_cmd->add_option("--out,-o", fit.out, "Artifact path (default stdout)");
    add_fit_options(fit_cmd, fit.fit);

    SelectCommand select;
    auto* select_cmd = app.add_subcommand("select-form", "Compare candidate forms M1-M4 against the midpoint baseline");
    select_cmd->add_option("--runs", select.runs, "Run table")->required()->check(CLI::ExistingFile);
    select_cmd->add_option("--domain", select.domain, "Validation domain")->required();
    select_cmd->add_option("--fit-ids", select.fit_ids, "Comma-separated run ids to fit on")->required();
    select_cmd->add_option("--val-ids", select.val_ids, "Comma-separated run ids to validate on")->required();
    select_cmd->add_flag("--json", select.as_json, "Emit JSON instead of a table");
    add_fit_options(select_cmd, select.fit);

    DesignCommand design;
    auto* design_cmd = app.add_subcommand("design", "Sample candidate mixtures to train on");
    design_cmd->add_option("--r-max", design.r_max, "Maximum proportion per domain")->required()->delimiter(',');
    design_cmd->add_option("--delta", design.delta, "Minimum grid size")->capture_default_str();
    design_cmd->add_option("--N", design.N, "Number of mixtures to sample")->capture_default_str();
    design_cmd->add_option("--domains", design.domains, "Domain names")->delimiter(',');
    design_cmd->add_flag("--all", design.all, "List every candidate instead of sampling");
    design_cmd->add_option("--out,-o", design.out, "Output path (default stdout)");

    SubsetCommand subset;
    auto* subset_cmd = app.add_subcommand("subset", "Choose the fitting subset with the lowest all-sample error");
    subset_cmd->add_option("--runs", subset.runs, "Run table, one row per mixture")->required()->check(CLI::ExistingFile);
    subset_cmd->add_option("--size", subset.size, "Subset size")->capture_default_str();
    subset_cmd->add_option("--resamples", subset.resamples, "Number of random subsets")->capture_default_str();
    subset_cmd->add_option("--domain", subset.domain, "Validation domain (omit for an implicit fit on overall loss)");
    add_fit_options(subset_cmd, subset.fit);

    PipelineCommand pipe;
    auto* pipe_cmd = app.add_subcommand("pipeline", "Nested step/size/mixing-law prediction");
    pipe_cmd->add_option("--runs", pipe.runs, "Run table with training curves")->required()->check(CLI::ExistingFile);
    pipe_cmd->add_option("--sizes", pipe.sizes, "Small model sizes")->required()->delimiter(',');
    pipe_cmd->add_option("--S0", pipe.S0, "Last observed step at small scale")->required();
    pipe_cmd->add_option("--S-target", pipe.S_target, "Target step count")->required();
    pipe_cmd->add_option("--N-target", pipe.N_target, "Target model size")->required();
    pipe_cmd->add_option("--min-fit-step", pipe.min_fit_step, "First step used by step laws")->capture_default_str();
    pipe_cmd->add_option("--targets", pipe.targets, "Mixture list to predict")->check(CLI::ExistingFile);
    pipe_cmd->add_option("--target", pipe.target_list, "Comma-separated mixture to predict (repeatable)");
    pipe_cmd->add_flag("--boosted", pipe.boosted, "Boosted ensemble for the overall chain");
    pipe_cmd->add_option("--out,-o", pipe.out, "Artifact path (default stdout)");
    add_fit_options(pipe_cmd, pipe.fit);

    OptimizeCommand opt;
    auto* opt_cmd = app.add_subcommand("optimize", "Find the loss-minimizing mixture");
    opt_cmd->add_option("--artifact", opt.artifact, "Law artifact")->required()->check(CLI::ExistingFile);
    opt_cmd->add_option("--grid-step", opt.grid_step, "Coarse grid step (default 0.02 for M <= 5, else 0.05)");
    opt_cmd->add_option("--refine-iters", opt.refine_iters, "Local refinement cap")->capture_default_str();
    opt_cmd->add_option("--bounds", opt.bounds, "Per-domain bounds lo:hi,lo:hi,...");
    opt_cmd->add_option("--chain", opt.chain, "Pipeline chain to minimize");
    opt_cmd->add_flag("--pareto", opt.pareto, "Add a per-domain Pareto report");
    opt_cmd->add_option("--pareto-step", opt.pareto_step, "Grid step for the Pareto report")->capture_default_str();
    opt_cmd->add_flag("--perplexity", opt.perplexity, "Report perplexity instead of loss");

    CriticalCommand crit;
    auto* crit_cmd = app.add_subcommand("critical", "Critical target-domain proportion for continual pretraining");
    crit_cmd->add_option("--c", crit.c, "Irreducible loss");
    crit_cmd->add_option("--k", crit.k, "Scale");
    crit_cmd->add_option("--t", crit.t, "Slope in the target-domain proportion");
    crit_cmd->add_option("--L0", crit.L0, "Loss before continual pretraining")->required();
    crit_cmd->add_option("--artifact", crit.artifact, "Two-domain law artifact instead of --c/--k/--t")->check(CLI::ExistingFile);
    crit_cmd->add_option("--target-domain", crit.target_domain, "Training domain being added (default: the second)");
    crit_cmd->add_flag("--json", crit.as_json, "Emit JSON");

    PredictCommand pred;
    auto* pred_cmd = app.add_subcommand("predict", "Evaluate an artifact");
    pred_cmd->add_option("--artifact", pred.artifact, "Law artifact")->required()->check(CLI::ExistingFile);
    pred_cmd->add_option("--mixture", pred.mixture_list, "Comma-separated mixture (repeatable)");
    pred_cmd->add_option("--mixtures", pred.mixtures, "Mixture list file")->check(CLI::ExistingFile);
    pred_cmd->add_option("--x", pred.xs, "Abscissae for power-law artifacts")->delimiter(',');
    pred_cmd->add_flag("--perplexity", pred.perplexity, "Report perplexity instead of loss");

    std::string serve_artifact, host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Serve an artifact over HTTP");
    serve_cmd->add_option("--artifact", serve_artifact, "Law artifact")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[usage]: " << e.what() << '\n';
        return kUsageExit;
    }

    try {
        if (*fit_cmd) return run_fit(fit, seed);
        if (*select_cmd) return run_select(select, seed);
        if (*design_cmd) return run_design(design, seed);
        if (*subset_cmd) return run_subset(subset, seed);
        if (*pipe_cmd) return run_pipeline_cmd(pipe, seed);
        if (*opt_cmd) return run_optimize(opt, seed);
        if (*crit_cmd) return run_critical(crit, seed);
        if (*pred_cmd) return run_predict(pred, seed);
        if (*serve_cmd) return run_serve(serve_artifact, host, port, seed);
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.kind()) << "]";
        if (!e.rule().empty()) std::cerr << "[rule=" << e.rule() << "]";
        std::cerr << ": " << e.what() << '\n';
        return 10 + static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
