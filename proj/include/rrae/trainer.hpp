// Training loop: length-bucketed minibatches without repetition within an
// epoch, match-drop loss, BPTT, ADAM with decay and L2, and a stopping rule
// on the tune-set matched-word rate. Also the evaluator and a random
// hyperparameter search harness.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rrae/adam.hpp"
#include "rrae/embedding.hpp"
#include "rrae/errors.hpp"
#include "rrae/loss.hpp"
#include "rrae/model.hpp"
#include "rrae/rng.hpp"

namespace rrae {

enum class LossKind { squared_match_drop, cosine_match_drop };

template <typename T>
struct TrainConfig {
    std::size_t minibatch = 32;
    AdamConfig<T> adam;
    std::size_t eval_every = 100;
    std::size_t patience = 5;
    double min_improvement = 0.001; // 0.1 percentage point, as a rate
    std::size_t max_iterations = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    LossKind loss = LossKind::squared_match_drop;

    void validate() const {
        if (minibatch < 1) throw ValidationError("train: minibatch must be >= 1");
        if (patience < 1) throw ValidationError("train: patience must be >= 1");
        if (eval_every < 1) throw ValidationError("train: eval_every must be >= 1");
        adam.validate();
    }
};

struct TrainLogRecord {
    std::uint64_t iteration = 0;
    double lr = 0.0;
    double train_loss = 0.0; // mean batch loss since the previous record
    double tune_matched = 0.0;
    double tune_exact = 0.0;
    double seconds = 0.0; // wall time; the one nondeterministic column
};

struct TrainLog {
    std::vector<TrainLogRecord> records;
};

inline void write_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "iteration,lr,train_loss,tune_matched,tune_exact,seconds\n";
    out.precision(17);
    for (const auto& r : log.records) {
        out << r.iteration << "," << r.lr << "," << r.train_loss << "," << r.tune_matched << ","
            << r.tune_exact << "," << r.seconds << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline TrainLog read_train_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "iteration,lr,train_loss,tune_matched,tune_exact,seconds") {
        throw ParseError(path + ":1: bad train log header");
    }
    TrainLog log;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        TrainLogRecord r;
        char c1, c2, c3, c4, c5;
        if (!(ls >> r.iteration >> c1 >> r.lr >> c2 >> r.train_loss >> c3 >> r.tune_matched >>
              c4 >> r.tune_exact >> c5 >> r.seconds) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',') {
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad train log record");
        }
        log.records.push_back(r);
    }
    return log;
}

struct LengthBucket {
    std::uint64_t matched_words = 0;
    std::uint64_t total_words = 0;
    std::uint64_t exact_sentences = 0;
    std::uint64_t sentences = 0;

    double matched_word_rate() const {
        return total_words == 0 ? 0.0
                                : static_cast<double>(matched_words) / static_cast<double>(total_words);
    }
    double exact_sentence_rate() const {
        return sentences == 0 ? 0.0
                              : static_cast<double>(exact_sentences) / static_cast<double>(sentences);
    }
};

struct EvalResult {
    std::uint64_t matched_words = 0;
    std::uint64_t total_words = 0; // all decoded positions, EOS included
    std::uint64_t exact_sentences = 0;
    std::uint64_t sentences = 0;
    std::map<std::size_t, LengthBucket> by_length; // keyed by pre-EOS content length

    double matched_word_rate() const {
        return total_words == 0 ? 0.0
                                : static_cast<double>(matched_words) / static_cast<double>(total_words);
    }
    double exact_sentence_rate() const {
        return sentences == 0 ? 0.0
                              : static_cast<double>(exact_sentences) / static_cast<double>(sentences);
    }
};

namespace detail {

inline void validate_dataset(const std::vector<std::vector<std::uint32_t>>& data,
                             const ModelConfig& cfg, std::size_t vocab, std::size_t eos,
                             const char* name) {
    for (const auto& seq : data) {
        if (seq.empty()) throw ValidationError(std::string(name) + ": empty sentence");
        if (seq.back() != eos) {
            throw ValidationError(std::string(name) + ": sentence does not end with EOS");
        }
        if (seq.size() > cfg.max_len + 1) {
            throw ValidationError(std::string(name) + ": sentence longer than max_len+1");
        }
        for (auto id : seq) {
            if (id >= vocab) {
                throw ValidationError(std::string(name) + ": token id " + std::to_string(id) +
                                      " outside vocabulary");
            }
        }
    }
}

} // namespace detail

template <typename T>
EvalResult evaluate(const ModelParams<T>& params, const ModelConfig& cfg,
                    const std::vector<std::vector<std::uint32_t>>& dataset,
                    const EmbeddingTable<T>& table) {
    if (dataset.empty()) throw UsageError("evaluate: empty dataset");
    EvalResult result;
    for (const auto& seq : dataset) {
        const auto rec = reconstruct(params, cfg, table, std::span<const std::uint32_t>(seq));
        std::uint64_t matched = 0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (rec.matched_ids[i] == seq[i]) ++matched;
        }
        const bool exact = matched == seq.size();
        auto& bucket = result.by_length[seq.size() - 1];
        bucket.matched_words += matched;
        bucket.total_words += seq.size();
        bucket.sentences += 1;
        bucket.exact_sentences += exact ? 1 : 0;
        result.matched_words += matched;
        result.total_words += seq.size();
        result.sentences += 1;
        result.exact_sentences += exact ? 1 : 0;
    }
    return result;
}

template <typename T>
struct BatchResult {
    double loss = 0.0; // position-summed, batch-averaged
    ModelParams<T> grads;
    std::uint64_t matched_positions = 0;
    std::uint64_t total_positions = 0;
};

// Forward, match-drop loss, and BPTT over one batch of sentence indices.
// Items are distributed over contiguous chunks, one per worker, and per-chunk
// gradients are reduced in chunk order, so the result is deterministic for a
// fixed thread count.
template <typename T>
BatchResult<T> batch_forward_backward(const ModelParams<T>& params, const ModelConfig& cfg,
                                      const EmbeddingTable<T>& table,
                                      const std::vector<std::vector<std::uint32_t>>& data,
                                      const std::vector<std::size_t>& batch, LossKind loss_kind,
                                      std::size_t threads) {
    if (batch.empty()) throw UsageError("batch_forward_backward: empty batch");
    const T inv_batch = T(1) / static_cast<T>(batch.size());

    struct ChunkOut {
        ModelParams<T> grads;
        double loss = 0.0;
        std::uint64_t matched = 0;
        std::uint64_t total = 0;
    };

    auto run_chunk = [&](std::size_t begin, std::size_t end, ChunkOut& out) {
        out.grads = zeros_like(params);
        for (std::size_t k = begin; k < end; ++k) {
            const auto& seq = data[batch[k]];
            auto trace = model_forward(params, cfg, ids_to_vectors(table, std::span<const std::uint32_t>(seq)));
            LossReport<T> report;
            std::vector<std::vector<T>> out_grads;
            if (loss_kind == LossKind::squared_match_drop) {
                report = match_drop_loss(trace.outputs, std::span<const std::uint32_t>(seq), table);
                out_grads = match_drop_grad_from_report(trace.outputs,
                                                        std::span<const std::uint32_t>(seq), table,
                                                        report);
            } else {
                report = cosine_loss(trace.outputs, std::span<const std::uint32_t>(seq), table);
                out_grads = cosine_grad(trace.outputs, std::span<const std::uint32_t>(seq), table);
            }
            out.loss += static_cast<double>(report.total_loss);
            out.matched += report.matched_count;
            out.total += report.position_count;
            for (auto& g : out_grads) {
                for (auto& x : g) x *= inv_batch;
            }
            accumulate(out.grads, model_backward(params, cfg, trace, out_grads));
        }
    };

    const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, batch.size()));
    std::vector<ChunkOut> outs(n_workers);
    if (n_workers == 1) {
        run_chunk(0, batch.size(), outs[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        const std::size_t per = (batch.size() + n_workers - 1) / n_workers;
        for (std::size_t w = 0; w < n_workers; ++w) {
            const std::size_t begin = w * per;
            const std::size_t end = std::min(batch.size(), begin + per);
            if (begin >= end) break;
            pool.emplace_back([&run_chunk, begin, end, &outs, w] { run_chunk(begin, end, outs[w]); });
        }
        for (auto& th : pool) th.join();
    }

    BatchResult<T> result;
    result.grads = std::move(outs[0].grads);
    result.loss = outs[0].loss;
    result.matched_positions = outs[0].matched;
    result.total_positions = outs[0].total;
    for (std::size_t w = 1; w < outs.size(); ++w) {
        if (outs[w].grads.parameter_count() == 0) continue;
        accumulate(result.grads, outs[w].grads);
        result.loss += outs[w].loss;
        result.matched_positions += outs[w].matched;
        result.total_positions += outs[w].total;
    }
    result.loss /= static_cast<double>(batch.size());
    return result;
}

namespace detail {

// One epoch's batch plan: shuffle within each length bucket, slice into
// uniform-length minibatches, then shuffle the batch order. Derived from
// (seed, epoch), so any iteration index replays identically after a resume.
inline std::vector<std::vector<std::size_t>> epoch_plan(
    const std::vector<std::vector<std::uint32_t>>& data, std::size_t minibatch,
    std::uint64_t seed, std::uint64_t epoch, Rng* state_echo = nullptr) {
    std::map<std::size_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < data.size(); ++i) buckets[data[i].size()].push_back(i);
    Rng rng(mix_seed(seed, epoch));
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [len, indices] : buckets) {
        rng.shuffle(indices);
        for (std::size_t start = 0; start < indices.size(); start += minibatch) {
            const std::size_t end = std::min(indices.size(), start + minibatch);
            batches.emplace_back(indices.begin() + start, indices.begin() + end);
        }
    }
    rng.shuffle(batches);
    if (state_echo) *state_echo = rng;
    return batches;
}

} // namespace detail

// Runs (or resumes) training until the tune matched-word rate stops improving
// by more than min_improvement for `patience` evaluations, or max_iterations.
// Resume continues from state.adam.iteration; everything the loop consumes is
// derived from (config seed, iteration), so a resumed run replays exactly.
template <typename T>
TrainLog train(ModelParams<T>& params, TrainState<T>& state, const ModelConfig& cfg,
               const std::vector<std::vector<std::uint32_t>>& train_data,
               const std::vector<std::vector<std::uint32_t>>& tune_data,
               const TrainConfig<T>& tcfg, const EmbeddingTable<T>& table) {
    tcfg.validate();
    cfg.validate();
    if (train_data.empty()) throw UsageError("train: empty training dataset");
    if (tune_data.empty()) throw UsageError("train: empty tune dataset");
    detail::validate_dataset(train_data, cfg, table.vocab(), table.eos_id(), "train dataset");
    detail::validate_dataset(tune_data, cfg, table.vocab(), table.eos_id(), "tune dataset");

    const std::size_t total_params = params.parameter_count();
    if (state.adam.size() == 0) {
        state.adam = AdamState<T>(total_params);
    } else if (state.adam.size() != total_params) {
        throw UsageError("train: optimizer state does not match the parameter count");
    }

    struct BlockRef {
        std::string name;
        std::vector<T>* data;
        std::size_t offset;
    };
    std::vector<BlockRef> param_blocks;
    {
        std::size_t offset = 0;
        for_each_block(params, [&](const char* name, std::vector<T>& block) {
            param_blocks.push_back(BlockRef{name, &block, offset});
            offset += block.size();
        });
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    TrainLog log;
    auto eval_record = [&](std::uint64_t iteration, double train_loss) {
        const auto tune = evaluate(params, cfg, tune_data, table);
        TrainLogRecord r;
        r.iteration = iteration;
        r.lr = tcfg.adam.lr(iteration);
        r.train_loss = train_loss;
        r.tune_matched = tune.matched_word_rate();
        r.tune_exact = tune.exact_sentence_rate();
        r.seconds = elapsed();
        log.records.push_back(r);
        return r;
    };

    if (state.adam.iteration == 0) {
        state.rng = Rng(tcfg.seed).state();
        eval_record(0, 0.0); // baseline; no steps behind this record
    }

    // Bucket sizes do not change across epochs, so the plan length is a
    // constant and iteration -> (epoch, position) is a pure function.
    std::size_t batches_per_epoch = 0;
    {
        std::map<std::size_t, std::size_t> bucket_sizes;
        for (const auto& seq : train_data) bucket_sizes[seq.size()] += 1;
        for (const auto& [len, count] : bucket_sizes) {
            batches_per_epoch += (count + tcfg.minibatch - 1) / tcfg.minibatch;
        }
    }
    std::vector<std::vector<std::size_t>> plan;
    std::uint64_t plan_epoch = std::numeric_limits<std::uint64_t>::max();

    double window_loss = 0.0;
    std::size_t window_batches = 0;
    bool stopped = false;
    while (!stopped && state.adam.iteration < tcfg.max_iterations) {
        const std::uint64_t t = state.adam.iteration;
        const std::uint64_t epoch = t / batches_per_epoch;
        const std::size_t position = static_cast<std::size_t>(t % batches_per_epoch);
        if (epoch != plan_epoch) {
            Rng echo(0);
            plan = detail::epoch_plan(train_data, tcfg.minibatch, tcfg.seed, epoch, &echo);
            plan_epoch = epoch;
            state.rng = echo.state();
        }

        const auto& batch = plan[position];
        auto result = batch_forward_backward(params, cfg, table, train_data, batch, tcfg.loss,
                                             tcfg.threads);
        if (!std::isfinite(result.loss)) {
            throw TrainError("train: non-finite loss at iteration " + std::to_string(t) +
                             ", batch " + std::to_string(position));
        }
        window_loss += result.loss;
        window_batches += 1;

        std::vector<const std::vector<T>*> grad_blocks;
        grad_blocks.reserve(param_blocks.size());
        for_each_block(result.grads, [&grad_blocks](const char*, const std::vector<T>& block) {
            grad_blocks.push_back(&block);
        });
        for (std::size_t b = 0; b < param_blocks.size(); ++b) {
            auto& ref = param_blocks[b];
            adam_update_block<T>(
                std::span<T>(*ref.data), std::span<const T>(*grad_blocks[b]),
                std::span<T>(state.adam.first_moment).subspan(ref.offset, ref.data->size()),
                std::span<T>(state.adam.second_moment).subspan(ref.offset, ref.data->size()), t,
                tcfg.adam, ref.name);
        }
        state.lr = tcfg.adam.lr(t);
        state.adam.iteration = t + 1;

        if (state.adam.iteration % tcfg.eval_every == 0 ||
            state.adam.iteration == tcfg.max_iterations) {
            const double mean_loss =
                window_batches == 0 ? 0.0 : window_loss / static_cast<double>(window_batches);
            const auto record = eval_record(state.adam.iteration, mean_loss);
            window_loss = 0.0;
            window_batches = 0;
            if (record.tune_matched > state.best_tune_matched + tcfg.min_improvement) {
                state.best_tune_matched = record.tune_matched;
                state.rounds_since_improvement = 0;
            } else {
                state.rounds_since_improvement += 1;
                if (state.rounds_since_improvement >= tcfg.patience) stopped = true;
            }
        }
    }
    return log;
}

template <typename T>
struct SearchSpace {
    T lr0_min = T(1e-5);
    T lr0_max = T(1e-2);
    T l2_min = T(1e-9);
    T l2_max = T(1e-5);
    std::vector<T> p1_choices = {T(0.85), T(0.9)};
    std::vector<T> p2_choices = {T(0.99), T(0.999)};

    void validate() const {
        if (!(lr0_min > T(0)) || lr0_max < lr0_min) {
            throw ValidationError("search: lr0 range must be positive and ordered");
        }
        if (l2_min < T(0) || l2_max < l2_min) {
            throw ValidationError("search: l2 range must be non-negative and ordered");
        }
        if (l2_min == T(0) && l2_max != l2_min) {
            throw ValidationError("search: log-uniform l2 needs a positive lower bound");
        }
        if (p1_choices.empty() || p2_choices.empty()) {
            throw ValidationError("search: p1/p2 choice sets must be non-empty");
        }
    }
};

template <typename T>
struct SearchTrial {
    std::size_t trial = 0;
    AdamConfig<T> adam;
    double tune_matched = 0.0;
    double tune_exact = 0.0;
    std::uint64_t iterations = 0;
};

// Samples lr0 and l2 log-uniform and p1/p2 from the choice sets, trains each
// draw for the budget, and ranks by tune matched-word rate.
template <typename T>
std::vector<SearchTrial<T>> random_search(const SearchSpace<T>& space, std::size_t trials,
                                          std::size_t budget_iterations, const ModelConfig& cfg,
                                          const TrainConfig<T>& base,
                                          const std::vector<std::vector<std::uint32_t>>& train_data,
                                          const std::vector<std::vector<std::uint32_t>>& tune_data,
                                          const EmbeddingTable<T>& table, std::uint64_t seed) {
    if (trials < 1) throw UsageError("random_search: trials must be >= 1");
    space.validate();
    std::vector<SearchTrial<T>> results;
    results.reserve(trials);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(mix_seed(seed, trial));
        SearchTrial<T> st;
        st.trial = trial;
        st.adam = base.adam;
        st.adam.lr0 = static_cast<T>(std::exp(rng.uniform(std::log(static_cast<double>(space.lr0_min)),
                                                          std::log(static_cast<double>(space.lr0_max)))));
        if (space.l2_min == space.l2_max) {
            st.adam.l2 = space.l2_min;
        } else {
            st.adam.l2 = static_cast<T>(std::exp(rng.uniform(std::log(static_cast<double>(space.l2_min)),
                                                             std::log(static_cast<double>(space.l2_max)))));
        }
        st.adam.p1 = space.p1_choices[rng.next_below(space.p1_choices.size())];
        st.adam.p2 = space.p2_choices[rng.next_below(space.p2_choices.size())];

        TrainConfig<T> tcfg = base;
        tcfg.adam = st.adam;
        tcfg.max_iterations = budget_iterations;
        tcfg.seed = mix_seed(seed, 0x10000 + trial);

        auto params = init_model<T>(cfg, mix_seed(seed, 0x20000 + trial));
        TrainState<T> state;
        train(params, state, cfg, train_data, tune_data, tcfg, table);
        const auto tune = evaluate(params, cfg, tune_data, table);
        st.tune_matched = tune.matched_word_rate();
        st.tune_exact = tune.exact_sentence_rate();
        st.iterations = state.adam.iteration;
        results.push_back(std::move(st));
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const SearchTrial<T>& a, const SearchTrial<T>& b) {
                         return a.tune_matched > b.tune_matched;
                     });
    return results;
}

} // namespace rrae
