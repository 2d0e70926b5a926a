// rrae command-line tool: preprocess, train, encode, decode, compress,
// decompress, evaluate, and hyperparameter search.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rrae/rrae.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct ToolConfig {
    // model
    std::size_t word_dim = 300;
    std::size_t hidden = 10000;
    std::size_t max_len = 60;
    // training
    std::size_t minibatch = 32;
    double lr0 = 4.22e-5;
    double decay = 0.9999987;
    double l2 = 1.84e-7;
    double p1 = 0.85;
    double p2 = 0.99;
    double epsilon = 1e-8;
    std::size_t eval_every = 100;
    std::size_t patience = 5;
    double min_improvement = 0.001;
    std::size_t max_iterations = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string loss = "squared";
    std::string float_width = "f64";
    // compressor
    double comp_ratio = 0.3;
    std::size_t comp_epochs = 400;
    double comp_lr0 = 1e-3;
    std::size_t comp_minibatch = 32;
};

ToolConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw rrae::UsageError("cannot open config file: " + path);
    ToolConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    auto parse_count = [](const std::string& key, const std::string& value) -> std::size_t {
        try {
            const long long v = std::stoll(value);
            if (v < 0) throw std::out_of_range("negative");
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw rrae::UsageError("config: bad value for field " + key + ": " + value);
        }
    };
    auto parse_real = [](const std::string& key, const std::string& value) -> double {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw rrae::UsageError("config: bad value for field " + key + ": " + value);
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw rrae::UsageError("config " + path + ":" + std::to_string(lineno) +
                                   ": expected key = value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key == "word_dim") cfg.word_dim = parse_count(key, value);
        else if (key == "hidden") cfg.hidden = parse_count(key, value);
        else if (key == "max_len") cfg.max_len = parse_count(key, value);
        else if (key == "minibatch") cfg.minibatch = parse_count(key, value);
        else if (key == "lr0") cfg.lr0 = parse_real(key, value);
        else if (key == "decay") cfg.decay = parse_real(key, value);
        else if (key == "l2") cfg.l2 = parse_real(key, value);
        else if (key == "p1") cfg.p1 = parse_real(key, value);
        else if (key == "p2") cfg.p2 = parse_real(key, value);
        else if (key == "epsilon") cfg.epsilon = parse_real(key, value);
        else if (key == "eval_every") cfg.eval_every = parse_count(key, value);
        else if (key == "patience") cfg.patience = parse_count(key, value);
        else if (key == "min_improvement") cfg.min_improvement = parse_real(key, value);
        else if (key == "max_iterations") cfg.max_iterations = parse_count(key, value);
        else if (key == "seed") cfg.seed = parse_count(key, value);
        else if (key == "threads") cfg.threads = parse_count(key, value);
        else if (key == "loss") {
            if (value != "squared" && value != "cosine") {
                throw rrae::UsageError("config: bad value for field loss: " + value);
            }
            cfg.loss = value;
        } else if (key == "float_width") {
            if (value != "f32" && value != "f64") {
                throw rrae::UsageError("config: bad value for field float_width: " + value);
            }
            cfg.float_width = value;
        } else if (key == "comp_ratio") cfg.comp_ratio = parse_real(key, value);
        else if (key == "comp_epochs") cfg.comp_epochs = parse_count(key, value);
        else if (key == "comp_lr0") cfg.comp_lr0 = parse_real(key, value);
        else if (key == "comp_minibatch") cfg.comp_minibatch = parse_count(key, value);
        else throw rrae::UsageError("config: unknown field " + key);
    }
    return cfg;
}

std::size_t effective_threads(std::size_t configured) {
    if (const char* env = std::getenv("RRAE_THREADS")) {
        try {
            const long long cap = std::stoll(env);
            if (cap >= 1) return std::min(configured, static_cast<std::size_t>(cap));
        } catch (const std::exception&) {
            // ignore malformed values; the configured count stands
        }
    }
    return configured;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) {
        throw rrae::UsageError(std::string(what) + " not found: " + path);
    }
}

template <typename T>
rrae::TrainConfig<T> to_train_config(const ToolConfig& cfg) {
    rrae::TrainConfig<T> tcfg;
    tcfg.minibatch = cfg.minibatch;
    tcfg.adam.lr0 = static_cast<T>(cfg.lr0);
    tcfg.adam.decay_per_iteration = static_cast<T>(cfg.decay);
    tcfg.adam.l2 = static_cast<T>(cfg.l2);
    tcfg.adam.p1 = static_cast<T>(cfg.p1);
    tcfg.adam.p2 = static_cast<T>(cfg.p2);
    tcfg.adam.epsilon = static_cast<T>(cfg.epsilon);
    tcfg.eval_every = cfg.eval_every;
    tcfg.patience = cfg.patience;
    tcfg.min_improvement = cfg.min_improvement;
    tcfg.max_iterations = cfg.max_iterations;
    tcfg.seed = cfg.seed;
    tcfg.threads = effective_threads(cfg.threads);
    tcfg.loss = cfg.loss == "cosine" ? rrae::LossKind::cosine_match_drop
                                     : rrae::LossKind::squared_match_drop;
    return tcfg;
}

rrae::ModelConfig to_model_config(const ToolConfig& cfg) {
    return rrae::ModelConfig{cfg.word_dim, cfg.hidden, cfg.max_len};
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
    std::vector<std::string> inputs;
    std::string embeddings;
    std::string out_dir;
    std::size_t max_words = 60;
    std::string splits = "0.98,0.01,0.01";
    std::uint64_t seed = 0;
    std::string digit_mode = "split01";
    std::vector<std::string> extra_specials;
    std::uint64_t special_seed = 12345;
};

int run_preprocess(const PreprocessArgs& args) {
    for (const auto& path : args.inputs) require_file(path, "input file");
    require_file(args.embeddings, "embeddings file");

    rrae::PipelineConfig pcfg;
    pcfg.max_words = args.max_words;
    pcfg.seed = args.seed;
    {
        std::istringstream ss(args.splits);
        char c1, c2;
        if (!(ss >> pcfg.train_frac >> c1 >> pcfg.tune_frac >> c2 >> pcfg.test_frac) ||
            c1 != ',' || c2 != ',') {
            throw rrae::UsageError("bad --splits, expected train,tune,test fractions");
        }
    }
    if (args.digit_mode == "split01") pcfg.digit_mode = rrae::DigitMode::split01;
    else if (args.digit_mode == "words") pcfg.digit_mode = rrae::DigitMode::words;
    else if (args.digit_mode == "literal") pcfg.digit_mode = rrae::DigitMode::literal;
    else throw rrae::UsageError("bad --digit-mode: " + args.digit_mode);
    pcfg.validate();

    auto table = rrae::load_embeddings<double>(args.embeddings);

    // Extend the table with every special token the pipeline can emit that
    // the embeddings file does not already supply.
    std::vector<std::string> missing;
    auto want = [&](const std::string& tok) {
        if (!table.lookup(tok)) missing.push_back(tok);
    };
    want(rrae::kEosToken);
    want(rrae::kUnkToken);
    for (const auto& p : pcfg.punctuation) want(p);
    for (const auto& extra : args.extra_specials) want(extra);
    if (!missing.empty()) table.add_special_vectors(missing, args.special_seed);

    fs::create_directories(args.out_dir);
    rrae::DatasetFiles files;
    const auto stats = rrae::build_dataset(args.inputs, pcfg, table, args.out_dir, &files);
    table.save_binary(args.out_dir + "/table.embb");

    json histogram = json::object();
    for (const auto& [len, count] : stats.length_histogram) {
        histogram[std::to_string(len)] = count;
    }
    json tokens = json::object();
    for (const auto& [tok, count] : stats.token_histogram) tokens[tok] = count;
    json out = {
        {"sentences_seen", stats.sentences_seen},
        {"kept", stats.kept},
        {"empty_removed", stats.empty_removed},
        {"duplicates_removed", stats.duplicates_removed},
        {"overlong_removed", stats.overlong_removed},
        {"train_count", stats.train_count},
        {"tune_count", stats.tune_count},
        {"test_count", stats.test_count},
        {"total_tokens", stats.total_tokens},
        {"unk_tokens", stats.unk_tokens},
        {"oov_rate", stats.oov_rate()},
        {"length_histogram", histogram},
        {"token_histogram", tokens},
    };
    std::ofstream js(args.out_dir + "/stats.json");
    if (!js) throw rrae::IoError("cannot write stats.json in " + args.out_dir);
    js << out.dump(2) << "\n";

    std::cout << "kept=" << stats.kept << " train=" << stats.train_count
              << " tune=" << stats.tune_count << " test=" << stats.test_count
              << " duplicates=" << stats.duplicates_removed
              << " overlong=" << stats.overlong_removed << "\n";
    return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
    std::string config;
    std::string data_dir;
    std::string checkpoint_out;
    std::string resume;
    std::string log_out;
    std::string compressor_out;
    std::optional<std::uint64_t> seed_override;
};

template <typename T>
int run_train_typed(const ToolConfig& cfg, const TrainArgs& args) {
    const auto model_cfg = to_model_config(cfg);
    auto tcfg = to_train_config<T>(cfg);
    if (args.seed_override) tcfg.seed = *args.seed_override;

    const std::string table_path = args.data_dir + "/table.embb";
    require_file(table_path, "table file");
    auto table = rrae::load_embeddings<T>(table_path);
    if (table.dim() != model_cfg.word_dim) {
        throw rrae::UsageError("config word_dim " + std::to_string(model_cfg.word_dim) +
                               " does not match table dim " + std::to_string(table.dim()));
    }
    require_file(args.data_dir + "/train.tok", "train token file");
    require_file(args.data_dir + "/tune.tok", "tune token file");
    const auto train_data = rrae::read_token_file(args.data_dir + "/train.tok", table.vocab_hash());
    const auto tune_data = rrae::read_token_file(args.data_dir + "/tune.tok", table.vocab_hash());

    rrae::ModelParams<T> params;
    rrae::TrainState<T> state;
    if (!args.resume.empty()) {
        require_file(args.resume, "resume checkpoint");
        auto loaded = rrae::load_checkpoint<T>(args.resume);
        if (loaded.config.word_dim != model_cfg.word_dim ||
            loaded.config.hidden != model_cfg.hidden ||
            loaded.config.max_len != model_cfg.max_len) {
            throw rrae::UsageError("resume checkpoint config does not match --config");
        }
        params = std::move(loaded.params);
        if (loaded.has_train_state) state = std::move(loaded.train_state);
    } else {
        params = rrae::init_model<T>(model_cfg, tcfg.seed);
    }

    auto log = rrae::train(params, state, model_cfg, train_data, tune_data, tcfg, table);

    if (!args.checkpoint_out.empty()) {
        rrae::save_checkpoint(args.checkpoint_out, params, model_cfg, &state);
    }
    if (!args.log_out.empty()) {
        rrae::write_train_log_csv(args.log_out, log);
    }
    if (!args.compressor_out.empty()) {
        // Compressor training corpus: sentence vectors of the train split.
        std::vector<std::vector<T>> svs;
        svs.reserve(train_data.size());
        for (const auto& seq : train_data) {
            auto enc = rrae::encode(params, model_cfg,
                                    rrae::ids_to_vectors(table, std::span<const std::uint32_t>(seq)));
            svs.push_back(std::move(enc.sv));
        }
        const std::size_t comp_dim = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(cfg.comp_ratio * static_cast<double>(model_cfg.hidden))));
        auto comp = rrae::init_compressor<T>(model_cfg.hidden, comp_dim, tcfg.seed + 1);
        rrae::AdamConfig<T> comp_adam;
        comp_adam.lr0 = static_cast<T>(cfg.comp_lr0);
        rrae::CompressorTrainOptions opts;
        opts.epochs = cfg.comp_epochs;
        opts.minibatch = cfg.comp_minibatch;
        opts.seed = tcfg.seed + 2;
        rrae::train_compressor(comp, svs, comp_adam, opts);
        rrae::save_compressor_checkpoint(args.compressor_out, comp, model_cfg);
    }

    double tune_matched = 0.0, tune_exact = 0.0;
    if (!log.records.empty()) {
        tune_matched = log.records.back().tune_matched;
        tune_exact = log.records.back().tune_exact;
    } else {
        const auto eval = rrae::evaluate(params, model_cfg, tune_data, table);
        tune_matched = eval.matched_word_rate();
        tune_exact = eval.exact_sentence_rate();
    }
    std::cout << "iterations=" << state.adam.iteration << " tune_matched=" << tune_matched
              << " tune_exact=" << tune_exact << "\n";
    return 0;
}

// ---------------------------------------------------------- encode / decode

template <typename T>
int run_encode_typed(const std::string& checkpoint, const std::string& table_path,
                     const std::string& input, const std::string& out, bool binary) {
    auto loaded = rrae::load_checkpoint<T>(checkpoint);
    auto table = rrae::load_embeddings<T>(table_path);
    if (table.dim() != loaded.config.word_dim) {
        throw rrae::UsageError("table dim " + std::to_string(table.dim()) +
                               " does not match checkpoint word_dim " +
                               std::to_string(loaded.config.word_dim));
    }
    const auto data = rrae::read_token_file(input);
    std::vector<std::vector<T>> svs;
    svs.reserve(data.size());
    for (const auto& seq : data) {
        auto enc = rrae::encode(loaded.params, loaded.config,
                                rrae::ids_to_vectors(table, std::span<const std::uint32_t>(seq)));
        svs.push_back(std::move(enc.sv));
    }
    if (binary) {
        rrae::write_sv_binary(out, svs, loaded.config.hidden);
    } else {
        rrae::write_sv_text(out, svs, loaded.config.hidden);
    }
    std::cout << "encoded=" << svs.size() << " dim=" << loaded.config.hidden << "\n";
    return 0;
}

template <typename T>
int run_decode_typed(const std::string& checkpoint, const std::string& table_path,
                     const std::string& vectors, const std::string& out) {
    auto loaded = rrae::load_checkpoint<T>(checkpoint);
    auto table = rrae::load_embeddings<T>(table_path);
    if (table.dim() != loaded.config.word_dim) {
        throw rrae::UsageError("table dim " + std::to_string(table.dim()) +
                               " does not match checkpoint word_dim " +
                               std::to_string(loaded.config.word_dim));
    }
    std::size_t dim = 0;
    const auto svs = rrae::read_sv_file<T>(vectors, &dim);
    if (dim != loaded.config.hidden) {
        throw rrae::UsageError("vector file dim " + std::to_string(dim) +
                               " does not match checkpoint hidden " +
                               std::to_string(loaded.config.hidden));
    }
    std::ofstream os(out);
    if (!os) throw rrae::IoError("cannot open for writing: " + out);
    for (const auto& sv : svs) {
        const auto ids = rrae::decode_until_eos(loaded.params, loaded.config, table,
                                                std::span<const T>(sv));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) os << " ";
            os << table.word(ids[i]);
        }
        os << "\n";
    }
    if (!os) throw rrae::IoError("write failed: " + out);
    std::cout << "decoded=" << svs.size() << "\n";
    return 0;
}

template <typename T>
int run_compress_typed(const std::string& checkpoint, const std::string& vectors,
                       const std::string& out, bool binary, bool inverse) {
    auto loaded = rrae::load_compressor_checkpoint<T>(checkpoint);
    std::size_t dim = 0;
    const auto input = rrae::read_sv_file<T>(vectors, &dim);
    const std::size_t expect = inverse ? loaded.params.compressed_dim() : loaded.params.hidden();
    if (dim != expect) {
        throw rrae::UsageError("vector file dim " + std::to_string(dim) +
                               " does not match compressor " +
                               (inverse ? "compressed size " : "input size ") +
                               std::to_string(expect));
    }
    std::vector<std::vector<T>> result;
    result.reserve(input.size());
    for (const auto& v : input) {
        result.push_back(inverse ? rrae::decompress(loaded.params, std::span<const T>(v))
                                 : rrae::compress(loaded.params, std::span<const T>(v)));
    }
    const std::size_t out_dim = inverse ? loaded.params.hidden() : loaded.params.compressed_dim();
    if (binary) {
        rrae::write_sv_binary(out, result, out_dim);
    } else {
        rrae::write_sv_text(out, result, out_dim);
    }
    std::cout << (inverse ? "decompressed=" : "compressed=") << result.size()
              << " dim=" << out_dim << "\n";
    return 0;
}

// ------------------------------------------------------------------ evaluate

template <typename T>
int run_evaluate_typed(const std::string& checkpoint, const std::string& table_path,
                       const std::string& data_path, const std::string& report_dir,
                       std::size_t sample, std::uint64_t seed) {
    auto loaded = rrae::load_checkpoint<T>(checkpoint);
    auto table = rrae::load_embeddings<T>(table_path);
    if (table.dim() != loaded.config.word_dim) {
        throw rrae::UsageError("table dim " + std::to_string(table.dim()) +
                               " does not match checkpoint word_dim " +
                               std::to_string(loaded.config.word_dim));
    }
    const auto data = rrae::read_token_file(data_path, table.vocab_hash());
    const auto eval = rrae::evaluate(loaded.params, loaded.config, data, table);
    if (!report_dir.empty()) {
        fs::create_directories(report_dir);
        const auto curves = rrae::length_curves(loaded.params, loaded.config, data, table);
        rrae::write_length_curves_csv(report_dir + "/metrics.csv", curves);
        const std::size_t n = std::min(sample, data.size());
        const auto records = rrae::sentence_table(loaded.params, loaded.config, data, table, n, seed);
        rrae::write_sentence_table_tsv(report_dir + "/sentences.tsv", records);
    }
    std::cout << "matched=" << eval.matched_word_rate() << " exact=" << eval.exact_sentence_rate()
              << "\n";
    return 0;
}

// -------------------------------------------------------------------- search

template <typename T>
int run_search_typed(const ToolConfig& cfg, const std::string& space_path, std::size_t trials,
                     std::size_t budget, const std::string& data_dir, const std::string& out_path,
                     std::uint64_t seed) {
    const auto model_cfg = to_model_config(cfg);
    const auto base = to_train_config<T>(cfg);

    rrae::SearchSpace<T> space;
    {
        std::ifstream in(space_path);
        if (!in) throw rrae::UsageError("cannot open search space file: " + space_path);
        json js;
        try {
            in >> js;
        } catch (const json::exception& e) {
            throw rrae::UsageError("bad search space JSON: " + std::string(e.what()));
        }
        if (js.contains("lr0")) {
            space.lr0_min = static_cast<T>(js["lr0"][0].get<double>());
            space.lr0_max = static_cast<T>(js["lr0"][1].get<double>());
        }
        if (js.contains("l2")) {
            space.l2_min = static_cast<T>(js["l2"][0].get<double>());
            space.l2_max = static_cast<T>(js["l2"][1].get<double>());
        }
        if (js.contains("p1")) {
            space.p1_choices.clear();
            for (const auto& v : js["p1"]) space.p1_choices.push_back(static_cast<T>(v.get<double>()));
        }
        if (js.contains("p2")) {
            space.p2_choices.clear();
            for (const auto& v : js["p2"]) space.p2_choices.push_back(static_cast<T>(v.get<double>()));
        }
    }

    const std::string table_path = data_dir + "/table.embb";
    require_file(table_path, "table file");
    auto table = rrae::load_embeddings<T>(table_path);
    const auto train_data = rrae::read_token_file(data_dir + "/train.tok", table.vocab_hash());
    const auto tune_data = rrae::read_token_file(data_dir + "/tune.tok", table.vocab_hash());

    const auto results = rrae::random_search(space, trials, budget, model_cfg, base, train_data,
                                             tune_data, table, seed);
    json out = json::array();
    for (const auto& r : results) {
        out.push_back({{"trial", r.trial},
                       {"lr0", static_cast<double>(r.adam.lr0)},
                       {"l2", static_cast<double>(r.adam.l2)},
                       {"p1", static_cast<double>(r.adam.p1)},
                       {"p2", static_cast<double>(r.adam.p2)},
                       {"tune_matched", r.tune_matched},
                       {"tune_exact", r.tune_exact},
                       {"iterations", r.iterations}});
    }
    if (out_path.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::ofstream os(out_path);
        if (!os) throw rrae::IoError("cannot open for writing: " + out_path);
        os << out.dump(2) << "\n";
        std::cout << "trials=" << results.size() << " best_tune_matched="
                  << (results.empty() ? 0.0 : results.front().tune_matched) << "\n";
    }
    return 0;
}

bool is_usage_error(const std::exception& e) {
    return dynamic_cast<const rrae::UsageError*>(&e) != nullptr ||
           dynamic_cast<const rrae::ValidationError*>(&e) != nullptr;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invertible sentence-embedding autoencoder"};
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* cmd_pre = app.add_subcommand("preprocess", "Run the corpus pipeline and write splits");
    cmd_pre->add_option("--input", pre.inputs, "Input text files, one sentence per line")->required();
    cmd_pre->add_option("--embeddings", pre.embeddings, "Embedding file (text or binary)")->required();
    cmd_pre->add_option("--out-dir", pre.out_dir, "Output directory")->required();
    cmd_pre->add_option("--max-words", pre.max_words, "Maximum content words per sentence");
    cmd_pre->add_option("--splits", pre.splits, "train,tune,test fractions");
    cmd_pre->add_option("--seed", pre.seed, "Split shuffle seed");
    cmd_pre->add_option("--digit-mode", pre.digit_mode, "split01 | words | literal");
    cmd_pre->add_option("--special", pre.extra_specials, "Extra tokens to receive special vectors");
    cmd_pre->add_option("--special-seed", pre.special_seed, "Seed for special-vector generation");

    TrainArgs tr;
    std::uint64_t tr_seed = 0;
    auto* cmd_train = app.add_subcommand("train", "Train the autoencoder");
    cmd_train->add_option("--config", tr.config, "Config file")->required();
    cmd_train->add_option("--data-dir", tr.data_dir, "Directory with train.tok/tune.tok/table.embb")
        ->required();
    cmd_train->add_option("--checkpoint-out", tr.checkpoint_out, "Checkpoint output path");
    cmd_train->add_option("--resume", tr.resume, "Checkpoint to resume from");
    cmd_train->add_option("--log-out", tr.log_out, "Training log CSV path");
    cmd_train->add_option("--compressor-out", tr.compressor_out,
                          "Also train the compressor and write its checkpoint here");
    auto* tr_seed_opt = cmd_train->add_option("--seed", tr_seed, "Override the config seed");

    std::string enc_ckpt, enc_table, enc_input, enc_out;
    bool enc_binary = false;
    auto* cmd_encode = app.add_subcommand("encode", "Token sequences to sentence vectors");
    cmd_encode->add_option("--checkpoint", enc_ckpt, "Model checkpoint")->required();
    cmd_encode->add_option("--table", enc_table, "Embedding table")->required();
    cmd_encode->add_option("--input", enc_input, "Token-id file")->required();
    cmd_encode->add_option("--out", enc_out, "Sentence-vector output file")->required();
    cmd_encode->add_flag("--binary", enc_binary, "Write the binary mirror format");

    std::string dec_ckpt, dec_table, dec_vectors, dec_out;
    auto* cmd_decode = app.add_subcommand("decode", "Sentence vectors to token text");
    cmd_decode->add_option("--checkpoint", dec_ckpt, "Model checkpoint")->required();
    cmd_decode->add_option("--table", dec_table, "Embedding table")->required();
    cmd_decode->add_option("--vectors", dec_vectors, "Sentence-vector file")->required();
    cmd_decode->add_option("--out", dec_out, "Decoded token output file")->required();

    std::string cmp_ckpt, cmp_vectors, cmp_out;
    bool cmp_binary = false;
    auto* cmd_compress = app.add_subcommand("compress", "Compress sentence vectors");
    cmd_compress->add_option("--checkpoint", cmp_ckpt, "Compressor checkpoint")->required();
    cmd_compress->add_option("--vectors", cmp_vectors, "Sentence-vector file")->required();
    cmd_compress->add_option("--out", cmp_out, "Compressed output file")->required();
    cmd_compress->add_flag("--binary", cmp_binary, "Write the binary mirror format");

    std::string dcp_ckpt, dcp_vectors, dcp_out;
    bool dcp_binary = false;
    auto* cmd_decompress = app.add_subcommand("decompress", "Decompress sentence vectors");
    cmd_decompress->add_option("--checkpoint", dcp_ckpt, "Compressor checkpoint")->required();
    cmd_decompress->add_option("--vectors", dcp_vectors, "Compressed vector file")->required();
    cmd_decompress->add_option("--out", dcp_out, "Reconstructed output file")->required();
    cmd_decompress->add_flag("--binary", dcp_binary, "Write the binary mirror format");

    std::string ev_ckpt, ev_table, ev_data, ev_report;
    std::size_t ev_sample = 10;
    std::uint64_t ev_seed = 0;
    auto* cmd_eval = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    cmd_eval->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required();
    cmd_eval->add_option("--table", ev_table, "Embedding table")->required();
    cmd_eval->add_option("--data", ev_data, "Token-id file")->required();
    cmd_eval->add_option("--report-dir", ev_report, "Write metrics.csv and sentences.tsv here");
    cmd_eval->add_option("--sample", ev_sample, "Sentence-table sample size");
    cmd_eval->add_option("--seed", ev_seed, "Sentence-table sample seed");

    std::string se_space, se_config, se_data_dir, se_out;
    std::size_t se_trials = 8, se_budget = 500;
    std::uint64_t se_seed = 0;
    auto* cmd_search = app.add_subcommand("search", "Random hyperparameter search");
    cmd_search->add_option("--space", se_space, "Search space JSON")->required();
    cmd_search->add_option("--config", se_config, "Base config file")->required();
    cmd_search->add_option("--data-dir", se_data_dir, "Directory with train.tok/tune.tok/table.embb")
        ->required();
    cmd_search->add_option("--trials", se_trials, "Number of trials");
    cmd_search->add_option("--budget", se_budget, "Iterations per trial");
    cmd_search->add_option("--out", se_out, "Ranked results JSON path (default stdout)");
    cmd_search->add_option("--seed", se_seed, "Search seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_pre->parsed()) return run_preprocess(pre);
        if (cmd_train->parsed()) {
            require_file(tr.config, "config file");
            const auto cfg = parse_config_file(tr.config);
            if (tr_seed_opt->count() > 0) tr.seed_override = tr_seed;
            return cfg.float_width == "f32" ? run_train_typed<float>(cfg, tr)
                                            : run_train_typed<double>(cfg, tr);
        }
        if (cmd_encode->parsed()) {
            require_file(enc_ckpt, "checkpoint");
            require_file(enc_table, "table file");
            require_file(enc_input, "input file");
            return run_encode_typed<double>(enc_ckpt, enc_table, enc_input, enc_out, enc_binary);
        }
        if (cmd_decode->parsed()) {
            require_file(dec_ckpt, "checkpoint");
            require_file(dec_table, "table file");
            require_file(dec_vectors, "vector file");
            return run_decode_typed<double>(dec_ckpt, dec_table, dec_vectors, dec_out);
        }
        if (cmd_compress->parsed()) {
            require_file(cmp_ckpt, "checkpoint");
            require_file(cmp_vectors, "vector file");
            return run_compress_typed<double>(cmp_ckpt, cmp_vectors, cmp_out, cmp_binary, false);
        }
        if (cmd_decompress->parsed()) {
            require_file(dcp_ckpt, "checkpoint");
            require_file(dcp_vectors, "vector file");
            return run_compress_typed<double>(dcp_ckpt, dcp_vectors, dcp_out, dcp_binary, true);
        }
        if (cmd_eval->parsed()) {
            require_file(ev_ckpt, "checkpoint");
            require_file(ev_table, "table file");
            require_file(ev_data, "data file");
            return run_evaluate_typed<double>(ev_ckpt, ev_table, ev_data, ev_report, ev_sample,
                                              ev_seed);
        }
        if (cmd_search->parsed()) {
            require_file(se_space, "search space file");
            require_file(se_config, "config file");
            const auto cfg = parse_config_file(se_config);
            return cfg.float_width == "f32"
                       ? run_search_typed<float>(cfg, se_space, se_trials, se_budget, se_data_dir,
                                                 se_out, se_seed)
                       : run_search_typed<double>(cfg, se_space, se_trials, se_budget, se_data_dir,
                                                  se_out, se_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_usage_error(e) ? 2 : 1;
    }
    return 0;
}
