#include "rsea/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsea/error.hpp"
#include "rsea/evaluation.hpp"

namespace rsea::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- config ------------------------------------------------------------------------

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(std::string("config: '") + section + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError(std::string("config: unknown key '") + key + "' in '" + section + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
    if (obj.contains(key)) dst = obj.at(key).get<T>();
}

OptimizerKind optimizer_from(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw ConfigError("config: optimizer must be 'adam' or 'sgd', got '" + name + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    RunConfig cfg;
    try {
        const json doc = json::parse(json_text);
        check_keys(doc, "root", {"seed", "dataset", "checkpoint", "synthetic", "model", "train", "eval"});
        read(doc, "seed", cfg.seed);
        if (doc.contains("dataset")) cfg.dataset = doc.at("dataset").get<std::string>();
        if (doc.contains("checkpoint")) cfg.checkpoint = doc.at("checkpoint").get<std::string>();
        if (doc.contains("synthetic")) {
            const json& s = doc.at("synthetic");
            check_keys(s, "synthetic", {"num_instances", "num_classes", "num_views", "num_nodes", "feature_dim", "p_in",
                                        "p_out", "noise_views", "feature_noise_sigma", "duplicate_view"});
            SyntheticConfig& sc = cfg.synthetic;
            read(s, "num_instances", sc.num_instances);
            read(s, "num_classes", sc.num_classes);
            read(s, "num_views", sc.num_views);
            read(s, "num_nodes", sc.num_nodes);
            read(s, "feature_dim", sc.feature_dim);
            read(s, "p_in", sc.p_in);
            read(s, "p_out", sc.p_out);
            read(s, "noise_views", sc.noise_views);
            read(s, "feature_noise_sigma", sc.feature_noise_sigma);
            read(s, "duplicate_view", sc.duplicate_view);
        }
        if (doc.contains("model")) {
            const json& m = doc.at("model");
            check_keys(m, "model", {"hidden_dims", "aggregation_gradient"});
            read(m, "hidden_dims", cfg.hidden_dims);
            read(m, "aggregation_gradient", cfg.aggregation_gradient);
        }
        if (doc.contains("train")) {
            const json& t = doc.at("train");
            check_keys(t, "train", {"epochs", "warmup_epochs", "learning_rate", "lambda", "optimizer", "beta1", "beta2",
                                    "epsilon", "enhance", "reliable_aggregation", "train_split"});
            TrainConfig& tc = cfg.train;
            read(t, "epochs", tc.epochs);
            if (t.contains("warmup_epochs")) tc.warmup_epochs = t.at("warmup_epochs").get<int>();
            read(t, "learning_rate", tc.learning_rate);
            read(t, "lambda", tc.lambda);
            if (t.contains("optimizer")) tc.optimizer = optimizer_from(t.at("optimizer").get<std::string>());
            read(t, "beta1", tc.beta1);
            read(t, "beta2", tc.beta2);
            read(t, "epsilon", tc.epsilon);
            read(t, "enhance", tc.enhancement_enabled);
            read(t, "reliable_aggregation", tc.reliable_aggregation_enabled);
            read(t, "train_split", cfg.train_split);
        }
        if (doc.contains("eval")) {
            const json& e = doc.at("eval");
            check_keys(e, "eval", {"ratios", "seeds"});
            read(e, "ratios", cfg.ratios);
            if (e.contains("seeds") && e.at("seeds").is_string()) {
                cfg.eval_seeds = parse_seeds(e.at("seeds").get<std::string>());  // "0..9" as on the command line
            } else {
                read(e, "seeds", cfg.eval_seeds);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_run_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string run_config_to_json(const RunConfig& cfg) {
    const SyntheticConfig& s = cfg.synthetic;
    const TrainConfig& t = cfg.train;
    json doc;
    doc["seed"] = cfg.seed;
    if (cfg.dataset) doc["dataset"] = cfg.dataset->string();
    if (cfg.checkpoint) doc["checkpoint"] = cfg.checkpoint->string();
    doc["synthetic"] = {{"num_instances", s.num_instances}, {"num_classes", s.num_classes},
                        {"num_views", s.num_views},         {"num_nodes", s.num_nodes},
                        {"feature_dim", s.feature_dim},     {"p_in", s.p_in},
                        {"p_out", s.p_out},                 {"noise_views", s.noise_views},
                        {"feature_noise_sigma", s.feature_noise_sigma}, {"duplicate_view", s.duplicate_view}};
    doc["model"] = {{"hidden_dims", cfg.hidden_dims}, {"aggregation_gradient", cfg.aggregation_gradient}};
    doc["train"] = {{"epochs", t.epochs},
                    {"warmup_epochs", t.resolved_warmup()},
                    {"learning_rate", t.learning_rate},
                    {"lambda", t.lambda},
                    {"optimizer", t.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
                    {"beta1", t.beta1},
                    {"beta2", t.beta2},
                    {"epsilon", t.epsilon},
                    {"enhance", t.enhancement_enabled},
                    {"reliable_aggregation", t.reliable_aggregation_enabled},
                    {"train_split", cfg.train_split}};
    doc["eval"] = {{"ratios", cfg.ratios}, {"seeds", cfg.eval_seeds}};
    return doc.dump(2);
}

void validate(const RunConfig& cfg) {
    validate(cfg.synthetic);
    validate(cfg.train);
    if (cfg.hidden_dims.empty()) throw ConfigError("model config: hidden_dims must not be empty");
    for (std::size_t d : cfg.hidden_dims)
        if (d < 1) throw ConfigError("model config: hidden dims must be >= 1");
    if (!(cfg.train_split > 0.0 && cfg.train_split < 1.0)) throw ConfigError("train_split must lie in (0, 1)");
    if (cfg.ratios.empty()) throw ConfigError("eval: at least one ratio is required");
    for (double r : cfg.ratios)
        if (!(r > 0.0 && r < 1.0)) throw ConfigError("eval: ratios must lie in (0, 1)");
    if (cfg.eval_seeds.empty()) throw ConfigError("eval: at least one seed is required");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    try {
        if (const auto dots = text.find(".."); dots != std::string::npos) {
            std::size_t used = 0;
            const auto lo = std::stoull(text.substr(0, dots), &used);
            if (used != dots) throw ConfigError("bad seed range '" + text + "'");
            const std::string rest = text.substr(dots + 2);
            const auto hi = std::stoull(rest, &used);
            if (used != rest.size() || hi < lo) throw ConfigError("bad seed range '" + text + "'");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
            return out;
        }
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size()) throw ConfigError("bad seed '" + item + "'");
        }
    } catch (const std::logic_error&) {
        throw ConfigError("bad seed list '" + text + "'");
    }
    if (out.empty()) throw ConfigError("empty seed list");
    return out;
}

std::vector<double> parse_ratios(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw ConfigError("bad ratio '" + item + "'");
        } catch (const std::logic_error&) {
            throw ConfigError("bad ratio '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty ratio list");
    return out;
}

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

// ---- commands ----------------------------------------------------------------------

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool no_enhance = false;
    bool no_reliable_agg = false;
    std::optional<int> epochs;
    std::string ratios;
    std::string seeds;
    std::string dataset;
    std::string checkpoint;
};

RunConfig resolve(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.no_enhance) cfg.train.enhancement_enabled = false;
    if (f.no_reliable_agg) cfg.train.reliable_aggregation_enabled = false;
    if (f.epochs) cfg.train.epochs = *f.epochs;
    if (!f.ratios.empty()) cfg.ratios = parse_ratios(f.ratios);
    if (!f.seeds.empty()) cfg.eval_seeds = parse_seeds(f.seeds);
    if (!f.dataset.empty()) cfg.dataset = f.dataset;
    if (!f.checkpoint.empty()) cfg.checkpoint = f.checkpoint;
    cfg.train.seed = cfg.seed;
    validate(cfg);
    return cfg;
}

const fs::path& require(const std::optional<fs::path>& p, const char* what) {
    if (!p) throw ConfigError(std::string("no ") + what + " given (use --" + what + " or the config file)");
    return *p;
}

Dataset open_dataset(const RunConfig& cfg) {
    const fs::path& path = require(cfg.dataset, "dataset");
    if (!fs::exists(path)) throw ConfigError("dataset file not found: " + path.string());
    return load_dataset(path);
}

Checkpoint open_checkpoint(const RunConfig& cfg) {
    const fs::path& path = require(cfg.checkpoint, "checkpoint");
    if (!fs::exists(path)) throw ConfigError("checkpoint file not found: " + path.string());
    return load_checkpoint(path);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

void check_model_matches(const Checkpoint& ckpt, const Dataset& ds) {
    if (ckpt.config.num_views != static_cast<std::size_t>(ds.num_views) ||
        ckpt.config.num_classes != static_cast<std::size_t>(ds.num_classes) ||
        ckpt.config.layer_dims.front() != static_cast<std::size_t>(ds.feature_dim)) {
        throw ConfigError("checkpoint does not match dataset (views, classes or feature dim)");
    }
}

EmbeddingMatrix embed_all(const Checkpoint& ckpt, const Dataset& ds) {
    ForwardOptions opts;
    opts.reliable_aggregation = ckpt.reliable_aggregation;
    std::vector<std::vector<double>> rows;
    rows.reserve(ds.instances.size());
    for (const auto& g : ds.instances) rows.push_back(embed(g, ckpt.params, ckpt.config, opts));
    return make_embedding(rows);
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path fresh_run_dir(const fs::path& root, const std::string& hash) {
    const std::string base = hash.substr(0, 12) + "-" + timestamp();
    fs::path dir = root / base;
    for (int k = 1; fs::exists(dir); ++k) dir = root / (base + "-" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

int cmd_generate(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const Dataset ds = generate_synthetic(cfg.synthetic, cfg.seed);
    write_text(f.out, dataset_to_json(ds));
    spdlog::info("wrote {} instances to {}", ds.instances.size(), f.out);
    std::cout << f.out << '\n';
    return 0;
}

int cmd_train(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const Dataset ds = open_dataset(cfg);
    ModelConfig mcfg;
    mcfg.layer_dims = {static_cast<std::size_t>(ds.feature_dim)};
    mcfg.layer_dims.insert(mcfg.layer_dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    mcfg.num_views = static_cast<std::size_t>(ds.num_views);
    mcfg.num_classes = static_cast<std::size_t>(ds.num_classes);
    mcfg.seed = cfg.seed;
    mcfg.aggregation_gradient = cfg.aggregation_gradient;
    const Split split = make_split(ds, cfg.train_split, cfg.seed);

    const TrainResult result = train(ds, split, mcfg, cfg.train);

    const std::string resolved = run_config_to_json(cfg);
    const fs::path dir = fresh_run_dir(f.out.empty() ? fs::path("runs") : fs::path(f.out), config_hash(resolved));
    write_text(dir / "config.json", resolved);
    write_text(dir / "checkpoint.json", checkpoint_to_json({mcfg, result.params, cfg.train.reliable_aggregation_enabled}));
    write_text(dir / "report.json", report_to_json(result.report));
    write_text(dir / "split.json", json{{"train", split.train}, {"test", split.test}, {"train_ratio", split.train_ratio}}.dump(2));
    if (result.report.enhancement_ran) write_text(dir / "enhanced_dataset.json", dataset_to_json(result.dataset));
    spdlog::info("final loss {:.6f}; artifacts in {}", result.report.epochs.back().loss, dir.string());
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_evaluate(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const Checkpoint ckpt = open_checkpoint(cfg);
    const Dataset ds = open_dataset(cfg);
    check_model_matches(ckpt, ds);
    const EmbeddingMatrix z = embed_all(ckpt, ds);
    const auto labels = ds.labels();
    const EvalReport report = evaluate(z, labels, ds.num_classes, cfg.ratios, cfg.eval_seeds);
    const fs::path dir(f.out);
    write_text(dir / "eval.json", eval_report_to_json(report));
    write_text(dir / "eval.csv", eval_report_to_csv(report));
    for (std::size_t r = 0; r < report.ratios.size(); ++r) {
        spdlog::info("ratio {:g}: Ma-F1 {:.4f} Mi-F1 {:.4f}", report.ratios[r], report.ma_f1[r].mean, report.mi_f1[r].mean);
    }
    spdlog::info("NMI {:.4f} ARI {:.4f}", report.nmi.mean, report.ari.mean);
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_enhance(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const Checkpoint ckpt = open_checkpoint(cfg);
    const Dataset ds = open_dataset(cfg);
    check_model_matches(ckpt, ds);
    std::vector<EnhancementRecord> records;
    const Dataset enhanced = enhance_dataset(ds, ckpt.params, &records);
    validate(enhanced);
    json reports = json::array();
    for (const auto& r : records) {
        for (std::size_t i = 1; i < r.trace.size(); ++i) {
            if (r.trace[i] > r.trace[i - 1]) {
                throw Error("enhance: uncertainty trace increased for instance " + r.instance_id);
            }
        }
        reports.push_back({{"id", r.instance_id}, {"view", r.view}, {"trace", r.trace}, {"R", r.total_enhanced},
                           {"iterations", r.iterations}});
    }
    const fs::path dir(f.out);
    write_text(dir / "enhanced_dataset.json", dataset_to_json(enhanced));
    write_text(dir / "enhance_report.json", reports.dump(2));
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_embed(const Flags& f) {
    const RunConfig cfg = resolve(f);
    const Checkpoint ckpt = open_checkpoint(cfg);
    const Dataset ds = open_dataset(cfg);
    check_model_matches(ckpt, ds);
    const EmbeddingMatrix z = embed_all(ckpt, ds);
    std::ostringstream os;
    os << "id,label";
    for (std::size_t c = 0; c < z.cols; ++c) os << ",z" << c;
    os << '\n';
    for (std::size_t i = 0; i < z.rows; ++i) {
        os << ds.instances[i].id << ',' << ds.instances[i].label;
        for (double v : z.row(i)) os << fmt::format(",{:.17g}", v);
        os << '\n';
    }
    write_text(f.out, os.str());
    std::cout << f.out << '\n';
    return 0;
}

void configure_logging() {
    auto logger = spdlog::get("rsea");
    if (!logger) logger = spdlog::stderr_color_mt("rsea");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("RSEA_LOG_LEVEL");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "info") {
        spdlog::set_level(spdlog::level::info);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        throw ConfigError("RSEA_LOG_LEVEL must be one of error, info, debug (got '" + level + "')");
    }
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Reliable structural enhancement for multi-view graph networks"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "Seed (overrides config)");
    };
    auto model_inputs = [&f](CLI::App* sub) {
        sub->add_option("--checkpoint", f.checkpoint, "Checkpoint JSON");
        sub->add_option("--dataset", f.dataset, "Dataset JSON");
    };

    CLI::App* gen = app.add_subcommand("generate", "Generate a synthetic multi-view dataset");
    common(gen);
    gen->add_option("--out", f.out, "Output dataset path")->required();

    CLI::App* trn = app.add_subcommand("train", "Train a model; artifacts go to a fresh per-run directory");
    common(trn);
    trn->add_option("--dataset", f.dataset, "Dataset JSON");
    trn->add_option("--out", f.out, "Root directory for run directories (default: runs)");
    trn->add_flag("--no-enhance", f.no_enhance, "Skip structural enhancement");
    trn->add_flag("--no-reliable-agg", f.no_reliable_agg, "Aggregate views with equal weights");
    trn->add_option("--epochs", f.epochs, "Total epochs (>= 1)");

    CLI::App* ev = app.add_subcommand("evaluate", "SVM classification and k-means clustering of embeddings");
    common(ev);
    model_inputs(ev);
    ev->add_option("--out", f.out, "Output directory for eval.json and eval.csv")->required();
    ev->add_option("--ratios", f.ratios, "Comma-separated training ratios, e.g. 0.2,0.6");
    ev->add_option("--seeds", f.seeds, "Seeds as a list (0,1,2) or an inclusive range (0..9)");

    CLI::App* enh = app.add_subcommand("enhance", "Enhance every view of a dataset with a trained probe");
    common(enh);
    model_inputs(enh);
    enh->add_option("--out", f.out, "Output directory")->required();

    CLI::App* emb = app.add_subcommand("embed", "Write instance embeddings as CSV");
    common(emb);
    model_inputs(emb);
    emb->add_option("--out", f.out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        configure_logging();
        if (gen->parsed()) return cmd_generate(f);
        if (trn->parsed()) return cmd_train(f);
        if (ev->parsed()) return cmd_evaluate(f);
        if (enh->parsed()) return cmd_enhance(f);
        if (emb->parsed()) return cmd_embed(f);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "error: training diverged at epoch " << e.epoch() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace rsea::cli
