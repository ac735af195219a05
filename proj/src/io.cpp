#include "mixlaw/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace mixlaw {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& msg,
                              const std::string& rule = "syntax") {
    fail(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + msg, rule);
}

template <class T>
T parse_number(const std::string& cell, const std::string& column, const std::string& source, std::size_t line) {
    T value{};
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        parse_error(source, line, "column " + column + ": '" + cell + "' is not a valid number", "number_format");
    }
    return value;
}

void check_identifier(const std::string& id, const char* what) {
    if (id.empty() || id.find_first_of(",\n\r\"") != std::string::npos || trim(id) != id) {
        fail(ErrorKind::InvalidArgument, std::string(what) + " '" + id + "' cannot be written to a run table");
    }
}

}  // namespace

// --- run tables -----------------------------------------------------------------

std::vector<RunRecord> parse_runs(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    if (header.empty()) parse_error(source, std::max<std::size_t>(line_no, 1), "missing header row", "header");

    const std::vector<std::string> fixed{"run_id", "model_size", "step", "batch_tokens"};
    if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
        parse_error(source, line_no, "header must start with run_id,model_size,step,batch_tokens", "header");
    }
    std::vector<std::string> domains, loss_names;
    std::optional<std::size_t> overall_col;
    std::set<std::string> seen;
    for (std::size_t c = fixed.size(); c < header.size(); ++c) {
        const auto& name = header[c];
        if (!seen.insert(name).second) parse_error(source, line_no, "duplicate column " + name, "header");
        if (name == "loss_overall") {
            overall_col = c;
        } else if (name.rfind("r_", 0) == 0 && name.size() > 2) {
            if (!loss_names.empty() || overall_col) parse_error(source, line_no, "r_ columns must precede loss columns", "header");
            domains.push_back(name.substr(2));
        } else if (name.rfind("loss_", 0) == 0 && name.size() > 5) {
            loss_names.push_back(name.substr(5));
        } else {
            parse_error(source, line_no, "unknown column '" + name + "'", "header");
        }
    }
    if (domains.empty()) parse_error(source, line_no, "header lists no r_<domain> columns", "header");
    if (loss_names.empty() && !overall_col) parse_error(source, line_no, "header lists no loss columns", "header");

    std::vector<RunRecord> out;
    std::set<std::pair<std::string, std::int64_t>> keys;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            parse_error(source, line_no,
                        "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()),
                        "field_count");
        }
        RunRecord rec;
        rec.run_id = cells[0];
        if (rec.run_id.empty()) parse_error(source, line_no, "run_id is empty", "run_id_present");
        rec.model_size = parse_number<double>(cells[1], "model_size", source, line_no);
        rec.step = parse_number<std::int64_t>(cells[2], "step", source, line_no);
        rec.batch_tokens = parse_number<std::int64_t>(cells[3], "batch_tokens", source, line_no);
        std::vector<double> r;
        for (std::size_t j = 0; j < domains.size(); ++j) {
            r.push_back(parse_number<double>(cells[4 + j], header[4 + j], source, line_no));
        }
        for (std::size_t j = 0; j < loss_names.size(); ++j) {
            const auto& cell = cells[4 + domains.size() + j];
            if (!cell.empty()) rec.domain_losses[loss_names[j]] = parse_number<double>(cell, "loss_" + loss_names[j], source, line_no);
        }
        if (overall_col && !cells[*overall_col].empty()) {
            rec.overall_loss = parse_number<double>(cells[*overall_col], "loss_overall", source, line_no);
        }
        const std::string where = source + ":" + std::to_string(line_no) + " (run " + rec.run_id + ")";
        try {
            rec.mixture = Mixture::from(std::move(r), domains);
            rec.validate();
        } catch (const Error& e) {
            fail(ErrorKind::Schema, where + ": " + e.what(), e.rule());
        }
        if (rec.domain_losses.empty() && !rec.overall_loss) {
            fail(ErrorKind::Schema, where + ": row has no loss values", "loss_present");
        }
        if (!keys.emplace(rec.run_id, rec.step).second) {
            fail(ErrorKind::Schema, where + ": duplicate (run_id, step) = (" + rec.run_id + ", " + std::to_string(rec.step) + ")",
                 "unique_run_step");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<RunRecord> load_runs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open run table " + path.string());
    return parse_runs(in, path.string());
}

std::string format_runs(std::span<const RunRecord> records) {
    if (records.empty()) fail(ErrorKind::InvalidArgument, "run table: nothing to write");
    const auto& domains = records.front().mixture.domain_names();
    std::set<std::string> loss_set;
    bool any_overall = false;
    for (const auto& rec : records) {
        if (rec.mixture.domain_names() != domains) fail(ErrorKind::DimensionMismatch, "run table: records disagree on training domains");
        for (const auto& [name, _] : rec.domain_losses) loss_set.insert(name);
        any_overall = any_overall || rec.overall_loss.has_value();
    }
    std::ostringstream os;
    os << "run_id,model_size,step,batch_tokens";
    for (const auto& d : domains) {
        check_identifier(d, "domain name");
        os << ",r_" << d;
    }
    for (const auto& d : loss_set) {
        check_identifier(d, "domain name");
        os << ",loss_" << d;
    }
    if (any_overall) os << ",loss_overall";
    os << '\n';
    for (const auto& rec : records) {
        check_identifier(rec.run_id, "run id");
        os << rec.run_id << ',' << format_double(rec.model_size) << ',' << rec.step << ',' << rec.batch_tokens;
        for (double p : rec.mixture.proportions()) os << ',' << format_double(p);
        for (const auto& d : loss_set) {
            os << ',';
            const auto it = rec.domain_losses.find(d);
            if (it != rec.domain_losses.end()) os << format_double(it->second);
        }
        if (any_overall) {
            os << ',';
            if (rec.overall_loss) os << format_double(*rec.overall_loss);
        }
        os << '\n';
    }
    return os.str();
}

void save_runs(const std::filesystem::path& path, std::span<const RunRecord> records) {
    const auto text = format_runs(records);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write run table " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<Mixture> parse_mixtures(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> domains;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        for (const auto& col : split(line)) {
            if (col.rfind("r_", 0) != 0 || col.size() < 3) parse_error(source, line_no, "expected r_<domain> columns, got '" + col + "'", "header");
            domains.push_back(col.substr(2));
        }
        break;
    }
    if (domains.empty()) parse_error(source, std::max<std::size_t>(line_no, 1), "missing header row", "header");
    std::vector<Mixture> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != domains.size()) {
            parse_error(source, line_no,
                        "expected " + std::to_string(domains.size()) + " fields, found " + std::to_string(cells.size()),
                        "field_count");
        }
        std::vector<double> r;
        for (std::size_t j = 0; j < cells.size(); ++j) r.push_back(parse_number<double>(cells[j], "r_" + domains[j], source, line_no));
        try {
            out.push_back(Mixture::from(std::move(r), domains));
        } catch (const Error& e) {
            fail(ErrorKind::Schema, source + ":" + std::to_string(line_no) + ": " + e.what(), e.rule());
        }
    }
    return out;
}

std::vector<Mixture> load_mixtures(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open mixture list " + path.string());
    return parse_mixtures(in, path.string());
}

std::string format_mixtures(std::span<const Mixture> mixtures) {
    if (mixtures.empty()) return {};
    std::ostringstream os;
    const auto& names = mixtures.front().domain_names();
    for (std::size_t j = 0; j < names.size(); ++j) {
        check_identifier(names[j], "domain name");
        os << (j ? "," : "") << "r_" << names[j];
    }
    os << '\n';
    for (const auto& m : mixtures) {
        for (std::size_t j = 0; j < m.size(); ++j) os << (j ? "," : "") << format_double(m[j]);
        os << '\n';
    }
    return os.str();
}

std::string data_digest(std::span<const RunRecord> records) {
    const auto text = records.empty() ? std::string() : format_runs(records);
    unsigned char hash[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), hash, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorKind::Io, "sha256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(hash[i]);
    return "sha256:" + os.str();
}

// --- JSON encodings -----------------------------------------------------------------

namespace {

template <class T>
T get(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) fail(ErrorKind::Schema, std::string("artifact: missing field '") + key + "'", "required_field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::Schema, std::string("artifact: field '") + key + "' has the wrong type", "field_type");
    }
}

json power_to_json(const PowerLaw& p) { return {{"c", p.c}, {"k", p.k}, {"alpha", p.alpha}}; }

PowerLaw power_from_json(const json& j) {
    PowerLaw p{get<double>(j, "c"), get<double>(j, "k"), get<double>(j, "alpha")};
    p.validate();
    return p;
}

json ensemble_to_json(const EnsembleModel& e) {
    json members = json::array();
    for (const auto& m : e.members()) members.push_back(model_to_json(m));
    return {{"members", members}, {"member_weights", std::vector<double>(e.member_weights().begin(), e.member_weights().end())}};
}

EnsembleModel ensemble_from_json(const json& j) {
    std::vector<MixingLawModel> members;
    for (const auto& m : get<json>(j, "members")) members.push_back(mixing_model_from_json(m));
    return EnsembleModel(std::move(members), get<std::vector<double>>(j, "member_weights"));
}

template <class Model>
json report_to_json(const FitReport<Model>& r, json model) {
    return {{"model", std::move(model)},
            {"train_mae", r.train_mae},
            {"val_mae", r.val_mae ? json(*r.val_mae) : json(nullptr)},
            {"objective", r.objective},
            {"converged", r.converged},
            {"restarts_used", r.restarts_used}};
}

template <class Model>
FitReport<Model> report_from_json(const json& j, Model model) {
    FitReport<Model> r{std::move(model), get<double>(j, "train_mae"), std::nullopt, get<double>(j, "objective"),
                       get<bool>(j, "converged"), get<int>(j, "restarts_used")};
    if (j.contains("val_mae") && !j.at("val_mae").is_null()) r.val_mae = get<double>(j, "val_mae");
    return r;
}

json pipeline_to_json(const PipelinePrediction& p) {
    json mixtures = json::array();
    for (const auto& m : p.mixtures) mixtures.push_back(std::vector<double>(m.proportions().begin(), m.proportions().end()));
    json targets = json::array();
    for (const auto& m : p.targets) targets.push_back(std::vector<double>(m.proportions().begin(), m.proportions().end()));
    json chains = json::array();
    for (const auto& c : p.chains) {
        json steps = json::array();
        for (const auto& s : c.step_laws) {
            steps.push_back({{"mixture", s.mixture}, {"size", s.size}, {"extrapolated", s.extrapolated},
                             {"fit", report_to_json(s.fit, power_to_json(s.fit.model))}});
        }
        json sizes = json::array();
        for (const auto& s : c.size_laws) {
            sizes.push_back({{"mixture", s.mixture}, {"extrapolated", s.extrapolated},
                             {"fit", report_to_json(s.fit, power_to_json(s.fit.model))}});
        }
        json chain{{"name", c.name}, {"step_laws", steps}, {"size_laws", sizes}};
        chain["mixing"] = c.mixing ? report_to_json(*c.mixing, model_to_json(c.mixing->model)) : json(nullptr);
        chain["boosted_mixing"] =
            c.boosted_mixing ? report_to_json(*c.boosted_mixing, ensemble_to_json(c.boosted_mixing->model)) : json(nullptr);
        chains.push_back(std::move(chain));
    }
    json predicted = json::array();
    for (const auto& out : p.predicted) {
        predicted.push_back({{"overall", out.overall ? json(*out.overall) : json(nullptr)}, {"per_domain", out.per_domain}});
    }
    return {{"training_domains", p.training_domains}, {"mixtures", mixtures}, {"chains", chains},
            {"targets", targets}, {"predicted", predicted}, {"warnings", p.warnings}};
}

PipelinePrediction pipeline_from_json(const json& j) {
    PipelinePrediction p;
    p.training_domains = get<std::vector<std::string>>(j, "training_domains");
    for (const auto& m : get<std::vector<std::vector<double>>>(j, "mixtures")) p.mixtures.push_back(Mixture::from(m, p.training_domains));
    for (const auto& m : get<std::vector<std::vector<double>>>(j, "targets")) p.targets.push_back(Mixture::from(m, p.training_domains));
    for (const auto& c : get<json>(j, "chains")) {
        PipelineChain chain;
        chain.name = get<std::string>(c, "name");
        for (const auto& s : get<json>(c, "step_laws")) {
            const auto fit = get<json>(s, "fit");
            chain.step_laws.push_back({get<std::size_t>(s, "mixture"), get<double>(s, "size"),
                                       report_from_json(fit, power_from_json(get<json>(fit, "model"))),
                                       get<double>(s, "extrapolated")});
        }
        for (const auto& s : get<json>(c, "size_laws")) {
            const auto fit = get<json>(s, "fit");
            chain.size_laws.push_back({get<std::size_t>(s, "mixture"),
                                       report_from_json(fit, power_from_json(get<json>(fit, "model"))),
                                       get<double>(s, "extrapolated")});
        }
        if (c.contains("mixing") && !c.at("mixing").is_null()) {
            const auto& r = c.at("mixing");
            chain.mixing = report_from_json(r, mixing_model_from_json(get<json>(r, "model")));
        }
        if (c.contains("boosted_mixing") && !c.at("boosted_mixing").is_null()) {
            const auto& r = c.at("boosted_mixing");
            chain.boosted_mixing = report_from_json(r, ensemble_from_json(get<json>(r, "model")));
        }
        if (!chain.mixing && !chain.boosted_mixing) {
            fail(ErrorKind::Schema, "artifact: pipeline chain '" + chain.name + "' has no mixing law", "required_field");
        }
        p.chains.push_back(std::move(chain));
    }
    for (const auto& o : get<json>(j, "predicted")) {
        PipelineOutput out;
        if (o.contains("overall") && !o.at("overall").is_null()) out.overall = get<double>(o, "overall");
        out.per_domain = get<std::map<std::string, double>>(o, "per_domain");
        p.predicted.push_back(std::move(out));
    }
    p.warnings = get<std::vector<std::string>>(j, "warnings");
    return p;
}

}  // namespace

json model_to_json(const MixingLawModel& model) {
    json laws = json::array();
    for (const auto& law : model.domain_laws()) laws.push_back({{"c", law.c}, {"k", law.k}, {"t", law.t}});
    return {{"form", std::string(to_string(model.form()))},
            {"aggregation", std::string(to_string(model.aggregation()))},
            {"training_domains", model.training_domains()},
            {"validation_domains", model.validation_domains()},
            {"weights", std::vector<double>(model.weights().begin(), model.weights().end())},
            {"domain_laws", laws}};
}

MixingLawModel mixing_model_from_json(const json& j) {
    const auto form = form_from_string(get<std::string>(j, "form"));
    const auto aggregation = aggregation_from_string(get<std::string>(j, "aggregation"));
    auto training = get<std::vector<std::string>>(j, "training_domains");
    auto validation = get<std::vector<std::string>>(j, "validation_domains");
    auto weights = get<std::vector<double>>(j, "weights");
    std::vector<DomainLaw> laws;
    for (const auto& l : get<json>(j, "domain_laws")) {
        DomainLaw law;
        law.form = form;
        law.c = get<double>(l, "c");
        law.k = get<std::vector<double>>(l, "k");
        law.t = get<std::vector<double>>(l, "t");
        laws.push_back(std::move(law));
    }
    switch (aggregation) {
        case Aggregation::Single:
            if (laws.size() != 1 || validation.size() != 1) {
                fail(ErrorKind::Schema, "artifact: single-domain model needs exactly one law", "law_count");
            }
            return MixingLawModel::single(std::move(laws.front()), std::move(training), validation.front());
        case Aggregation::Explicit:
            return MixingLawModel::explicit_sum(std::move(laws), std::move(weights), std::move(training), std::move(validation));
        case Aggregation::Implicit: {
            auto model = MixingLawModel::implicit_sum(std::move(laws), std::move(weights), std::move(training));
            if (model.validation_domains() != validation) {
                fail(ErrorKind::Schema, "artifact: implicit domain names do not match", "validation_domains");
            }
            return model;
        }
    }
    fail(ErrorKind::Schema, "artifact: unknown aggregation");
}

std::string LawArtifact::kind() const {
    switch (model.index()) {
        case 0: return "power";
        case 1: return "mixing";
        case 2: return "ensemble";
        default: return "pipeline";
    }
}

std::size_t LawArtifact::dims() const { return training_domains().size(); }

std::vector<std::string> LawArtifact::training_domains() const {
    if (const auto* m = std::get_if<MixingLawModel>(&model)) return m->training_domains();
    if (const auto* e = std::get_if<EnsembleModel>(&model)) return e->members().front().training_domains();
    if (const auto* p = std::get_if<PipelinePrediction>(&model)) return p->training_domains;
    return {};
}

json to_json(const LawArtifact& a) {
    json model;
    if (const auto* p = std::get_if<PowerLaw>(&a.model)) model = power_to_json(*p);
    else if (const auto* m = std::get_if<MixingLawModel>(&a.model)) model = model_to_json(*m);
    else if (const auto* e = std::get_if<EnsembleModel>(&a.model)) model = ensemble_to_json(*e);
    else model = pipeline_to_json(std::get<PipelinePrediction>(a.model));

    json fitted = json::array();
    for (const auto& f : a.fitted) fitted.push_back({{"input", f.input}, {"prediction", f.prediction}});
    return {{"schema_version", a.schema_version},
            {"kind", a.kind()},
            {"model", model},
            {"provenance",
             {{"config", a.provenance.config},
              {"seed", a.provenance.seed},
              {"data_digest", a.provenance.data_digest},
              {"stage_maes", a.provenance.stage_maes}}},
            {"fitted", fitted}};
}

LawArtifact artifact_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorKind::Schema, "artifact: top level must be an object", "field_type");
    LawArtifact a;
    a.schema_version = get<int>(j, "schema_version");
    if (a.schema_version != kSchemaVersion) {
        fail(ErrorKind::Schema, "artifact: unsupported schema_version " + std::to_string(a.schema_version), "schema_version");
    }
    const auto kind = get<std::string>(j, "kind");
    const auto model = get<json>(j, "model");
    try {
        if (kind == "power") a.model = power_from_json(model);
        else if (kind == "mixing") a.model = mixing_model_from_json(model);
        else if (kind == "ensemble") a.model = ensemble_from_json(model);
        else if (kind == "pipeline") a.model = pipeline_from_json(model);
        else fail(ErrorKind::Schema, "artifact: unknown kind '" + kind + "'", "kind");
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Schema) throw;
        fail(ErrorKind::Schema, std::string("artifact: invalid model: ") + e.what(), e.rule().empty() ? "model" : e.rule());
    }
    const auto prov = get<json>(j, "provenance");
    a.provenance.config = get<json>(prov, "config");
    a.provenance.seed = get<std::uint64_t>(prov, "seed");
    a.provenance.data_digest = get<std::string>(prov, "data_digest");
    a.provenance.stage_maes = get<std::map<std::string, double>>(prov, "stage_maes");
    for (const auto& f : get<json>(j, "fitted")) {
        a.fitted.push_back({get<std::vector<double>>(f, "input"), get<double>(f, "prediction")});
    }
    return a;
}

std::string serialize_artifact(const LawArtifact& artifact) { return to_json(artifact).dump(2) + "\n"; }

LawArtifact parse_artifact(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("artifact: ") + e.what(), "json_syntax");
    }
    return artifact_from_json(j);
}

LawArtifact load_artifact(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open artifact " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_artifact(ss.str());
}

void save_artifact(const std::filesystem::path& path, const LawArtifact& artifact) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write artifact " + path.string());
    out << serialize_artifact(artifact);
    if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

// --- artifact operations --------------------------------------------------------------

ArtifactPrediction predict_artifact(const LawArtifact& artifact, std::span<const double> r) {
    ArtifactPrediction out;
    const auto from_prediction = [&](const Prediction& p, const std::vector<std::string>& names) {
        out.overall = p.overall;
        for (std::size_t i = 0; i < p.per_domain.size(); ++i) out.per_domain.emplace_back(names[i], p.per_domain[i]);
    };
    if (const auto* m = std::get_if<MixingLawModel>(&artifact.model)) {
        from_prediction(eval_model(*m, r), m->validation_domains());
    } else if (const auto* e = std::get_if<EnsembleModel>(&artifact.model)) {
        // The per-domain breakdown comes from the median member.
        std::vector<double> overall;
        for (const auto& member : e->members()) overall.push_back(eval_model(member, r).overall);
        const auto& median = e->members()[weighted_median_index(overall, e->member_weights())];
        from_prediction(eval_model(median, r), median.validation_domains());
    } else if (const auto* p = std::get_if<PipelinePrediction>(&artifact.model)) {
        const auto res = predict(*p, r);
        for (const auto& [name, v] : res.per_domain) out.per_domain.emplace_back(name, v);
        if (res.overall) out.overall = *res.overall;
        else if (res.per_domain.size() == 1) out.overall = res.per_domain.begin()->second;
        else fail(ErrorKind::InvalidArgument, "predict: pipeline has no overall chain");
    } else {
        fail(ErrorKind::InvalidArgument, "predict: power-law artifacts take x values, not mixtures");
    }
    return out;
}

double predict_power(const LawArtifact& artifact, double x) {
    const auto* p = std::get_if<PowerLaw>(&artifact.model);
    if (!p) fail(ErrorKind::InvalidArgument, "predict: artifact is not a power law");
    return eval_power_law(*p, x);
}

ArgminResult optimize_artifact(const LawArtifact& artifact, const OptimizeConfig& config, const std::string& chain) {
    if (const auto* m = std::get_if<MixingLawModel>(&artifact.model)) return argmin_mixture(*m, config);
    if (const auto* e = std::get_if<EnsembleModel>(&artifact.model)) return argmin_mixture(*e, config);
    if (const auto* p = std::get_if<PipelinePrediction>(&artifact.model)) return argmin_mixture(*p, config, chain);
    fail(ErrorKind::InvalidArgument, "optimize: power-law artifacts have no mixture to optimize");
}

json artifact_metadata(const LawArtifact& artifact) {
    json meta{{"schema_version", artifact.schema_version},
              {"kind", artifact.kind()},
              {"domain_names", artifact.training_domains()},
              {"M", artifact.dims()},
              {"data_digest", artifact.provenance.data_digest},
              {"seed", artifact.provenance.seed}};
    if (const auto* m = std::get_if<MixingLawModel>(&artifact.model)) {
        meta["K"] = m->domain_count();
        meta["form"] = std::string(to_string(m->form()));
        meta["aggregation"] = std::string(to_string(m->aggregation()));
        meta["validation_domains"] = m->validation_domains();
    } else if (const auto* e = std::get_if<EnsembleModel>(&artifact.model)) {
        meta["K"] = e->members().front().domain_count();
        meta["members"] = e->members().size();
        meta["validation_domains"] = e->members().front().validation_domains();
    } else if (const auto* p = std::get_if<PipelinePrediction>(&artifact.model)) {
        std::vector<std::string> chains;
        for (const auto& c : p->chains) chains.push_back(c.name);
        meta["chains"] = chains;
        meta["validation_domains"] = chains;
        std::size_t k = 0;
        if (const auto* c = p->chain(kOverallChain); c && c->mixing) k = c->mixing->model.domain_count();
        meta["K"] = k;
    } else {
        meta["K"] = 0;
    }
    return meta;
}

std::vector<double> mixture_from_json(const json& j, std::span<const std::string> domains) {
    std::vector<double> r;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number()) fail(ErrorKind::Schema, "mixture entries must be numbers", "field_type");
            r.push_back(v.get<double>());
        }
    } else if (j.is_object()) {
        for (const auto& name : domains) {
            if (!j.contains(name)) fail(ErrorKind::Schema, "mixture is missing domain '" + name + "'", "dimension");
            if (!j.at(name).is_number()) fail(ErrorKind::Schema, "mixture entries must be numbers", "field_type");
            r.push_back(j.at(name).get<double>());
        }
        if (j.size() != domains.size()) fail(ErrorKind::Schema, "mixture names an unknown domain", "dimension");
    } else {
        fail(ErrorKind::Schema, "mixture must be an array or an object", "field_type");
    }
    if (r.size() != domains.size()) {
        fail(ErrorKind::Schema,
             "mixture has " + std::to_string(r.size()) + " entries, expected M = " + std::to_string(domains.size()),
             "dimension");
    }
    try {
        (void)Mixture::from(r, std::vector<std::string>(domains.begin(), domains.end()));
    } catch (const Error& e) {
        fail(ErrorKind::Schema, e.what(), e.rule());
    }
    return r;
}

}  // namespace mixlaw
