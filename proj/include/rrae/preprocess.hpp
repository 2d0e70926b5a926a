// Corpus pipeline: ASCII normalization, rule-based tokenization, punctuation
// standardization, phrase merging against the vocabulary, digit conversion,
// dedup, length filtering, and seeded train/tune/test splitting.
//
// The tokenizer is a rule-based stand-in for a full NLP toolkit. Its rules,
// pinned by golden tests:
//   - split on whitespace; hyphens always become their own token
//   - leading/trailing punctuation detaches one character at a time
//   - internal apostrophes and periods stay ("wasn't", "Health.com")
//   - a trailing possessive 's detaches as a bare "s" token
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rrae/embedding.hpp"
#include "rrae/errors.hpp"
#include "rrae/rng.hpp"

namespace rrae {

enum class DigitMode {
    split01, // digits split; 2-9 become words, 0 and 1 stay digit tokens
    words,   // digits split; all become words
    literal  // digits split; all stay digit tokens
};

inline const std::set<std::string>& default_punctuation_set() {
    static const std::set<std::string> set = {".", ",", "!", "?", "\"", "'",
                                              "-", ":", ";", "(", ")"};
    return set;
}

struct PipelineConfig {
    std::size_t max_words = 60; // content tokens, before EOS
    double train_frac = 0.98;
    double tune_frac = 0.01;
    double test_frac = 0.01;
    DigitMode digit_mode = DigitMode::split01;
    std::uint64_t seed = 0;
    std::set<std::string> punctuation = default_punctuation_set();

    void validate() const {
        if (max_words < 1) throw ValidationError("pipeline: max_words must be >= 1");
        if (!(train_frac > 0.0) || !(tune_frac > 0.0) || !(test_frac > 0.0)) {
            throw ValidationError("pipeline: split fractions must be positive");
        }
        const double sum = train_frac + tune_frac + test_frac;
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError("pipeline: split fractions must sum to 1");
        }
        if (train_frac < tune_frac || train_frac < test_frac) {
            throw ValidationError("pipeline: train fraction must dominate");
        }
    }
};

struct CorpusStats {
    std::size_t sentences_seen = 0;
    std::size_t kept = 0;
    std::size_t empty_removed = 0;
    std::size_t duplicates_removed = 0;
    std::size_t overlong_removed = 0;
    std::size_t train_count = 0;
    std::size_t tune_count = 0;
    std::size_t test_count = 0;
    std::size_t total_tokens = 0; // content tokens over kept sentences
    std::size_t unk_tokens = 0;
    std::map<std::size_t, std::size_t> length_histogram;
    std::map<std::string, std::size_t> token_histogram;

    double oov_rate() const {
        return total_tokens == 0 ? 0.0
                                 : static_cast<double>(unk_tokens) / static_cast<double>(total_tokens);
    }
};

namespace detail {

// Transliteration for the accented-Latin and typographic codepoints that
// matter in practice; everything unmapped and non-ASCII is removed.
inline const char* ascii_replacement(char32_t cp) {
    // Latin-1 supplement letters.
    static const char* latin1[64] = {
        "A", "A", "A", "A", "A", "A", "AE", "C", "E", "E", "E", "E", "I", "I", "I", "I",
        "D", "N", "O", "O", "O", "O", "O", "",  "O", "U", "U", "U", "U", "Y", "Th", "ss",
        "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
        "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "y"};
    if (cp >= 0xC0 && cp <= 0xFF) return latin1[cp - 0xC0];
    // Latin Extended-A: strip diacritics pairwise; handle the few digraphs.
    static const char* extended[128] = {
        "A", "a", "A", "a", "A", "a", "C", "c", "C", "c", "C", "c", "C", "c", "D", "d",
        "D", "d", "E", "e", "E", "e", "E", "e", "E", "e", "E", "e", "G", "g", "G", "g",
        "G", "g", "G", "g", "H", "h", "H", "h", "I", "i", "I", "i", "I", "i", "I", "i",
        "I", "i", "IJ", "ij", "J", "j", "K", "k", "k", "L", "l", "L", "l", "L", "l", "L",
        "l", "L", "l", "N", "n", "N", "n", "N", "n", "n", "N", "n", "O", "o", "O", "o",
        "O", "o", "OE", "oe", "R", "r", "R", "r", "R", "r", "S", "s", "S", "s", "S", "s",
        "S", "s", "T", "t", "T", "t", "T", "t", "U", "u", "U", "u", "U", "u", "U", "u",
        "U", "u", "U", "u", "W", "w", "Y", "y", "Y", "Z", "z", "Z", "z", "Z", "z", "s"};
    if (cp >= 0x100 && cp <= 0x17F) return extended[cp - 0x100];
    switch (cp) {
        case 0x00A0: return " ";  // no-break space
        case 0x00AB: case 0x00BB: return "\"";
        case 0x00B4: return "'";
        case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014: case 0x2015:
            return "-";
        case 0x2018: case 0x2019: case 0x201A: case 0x201B: return "'";
        case 0x201C: case 0x201D: case 0x201E: case 0x201F: return "\"";
        case 0x2026: return "...";
        case 0x2032: return "'";
        case 0x2033: return "\"";
        default: return nullptr;
    }
}

// Minimal UTF-8 decoder; malformed bytes are skipped.
inline bool decode_utf8(const std::string& text, std::size_t& i, char32_t& cp) {
    const auto byte = [&text](std::size_t k) {
        return static_cast<unsigned char>(text[k]);
    };
    const unsigned char b0 = byte(i);
    std::size_t len = 0;
    if (b0 < 0x80) {
        cp = b0;
        len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        cp = b0 & 0x1F;
        len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
        cp = b0 & 0x0F;
        len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
        cp = b0 & 0x07;
        len = 4;
    } else {
        ++i;
        return false;
    }
    if (i + len > text.size()) {
        ++i;
        return false;
    }
    for (std::size_t k = 1; k < len; ++k) {
        if ((byte(i + k) & 0xC0) != 0x80) {
            ++i;
            return false;
        }
        cp = (cp << 6) | (byte(i + k) & 0x3F);
    }
    i += len;
    return true;
}

inline bool is_ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline bool all_digits(const std::string& token) {
    if (token.empty()) return false;
    return std::all_of(token.begin(), token.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

inline bool all_ascii_punct(const std::string& token) {
    if (token.empty()) return false;
    return std::all_of(token.begin(), token.end(), is_ascii_punct);
}

// Emits a hyphen-free segment: detach leading/trailing punctuation one
// character at a time, split a trailing possessive 's.
inline void emit_segment(std::string seg, std::vector<std::string>& out) {
    std::size_t lo = 0, hi = seg.size();
    std::vector<char> trailing;
    while (lo < hi && is_ascii_punct(seg[lo])) {
        out.emplace_back(1, seg[lo]);
        ++lo;
    }
    while (hi > lo && is_ascii_punct(seg[hi - 1])) {
        trailing.push_back(seg[hi - 1]);
        --hi;
    }
    std::string core = seg.substr(lo, hi - lo);
    if (!core.empty()) {
        const std::size_t n = core.size();
        if (n >= 3 && core[n - 2] == '\'' && (core[n - 1] == 's' || core[n - 1] == 'S')) {
            out.push_back(core.substr(0, n - 2));
            out.emplace_back(1, core[n - 1]);
        } else {
            out.push_back(std::move(core));
        }
    }
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
        out.emplace_back(1, *it);
    }
}

} // namespace detail

// Best-effort transliteration to ASCII; unmapped non-ASCII is dropped.
inline std::string normalize_ascii(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = 0;
        if (!detail::decode_utf8(text, i, cp)) continue;
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
            continue;
        }
        if (const char* repl = detail::ascii_replacement(cp)) out += repl;
    }
    return out;
}

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream stream(text);
    std::string chunk;
    while (stream >> chunk) {
        std::size_t start = 0;
        for (std::size_t k = 0; k <= chunk.size(); ++k) {
            if (k == chunk.size() || chunk[k] == '-') {
                if (k > start) detail::emit_segment(chunk.substr(start, k - start), out);
                if (k < chunk.size()) out.emplace_back("-");
                start = k + 1;
            }
        }
    }
    return out;
}

// Maps punctuation variants onto the allowed set; punctuation tokens outside
// the set are dropped; word tokens pass through.
inline std::vector<std::string> standardize_punctuation(
    const std::vector<std::string>& tokens,
    const std::set<std::string>& allowed = default_punctuation_set()) {
    static const std::unordered_map<std::string, std::string> variants = {
        {"``", "\""}, {"''", "\""}, {"“", "\""}, {"”", "\""}, {"„", "\""},
        {"«", "\""}, {"»", "\""}, {"`", "'"}, {"´", "'"}, {"‘", "'"},
        {"’", "'"}, {"‚", "'"}, {"--", "-"}, {"‐", "-"}, {"‑", "-"},
        {"–", "-"}, {"—", "-"}, {"―", "-"}, {"…", "."}};
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& raw : tokens) {
        std::string tok = raw;
        auto it = variants.find(tok);
        if (it != variants.end()) tok = it->second;
        if (detail::all_ascii_punct(tok)) {
            if (allowed.count(tok)) out.push_back(std::move(tok));
            continue;
        }
        out.push_back(std::move(tok));
    }
    return out;
}

// Greedy left-to-right longest match of adjacent tokens whose
// underscore-joined form is in the vocabulary.
template <typename T>
std::vector<std::string> merge_phrases(const std::vector<std::string>& tokens,
                                       const EmbeddingTable<T>& table) {
    const std::size_t max_span = table.max_phrase_words();
    if (max_span < 2) return tokens;
    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t taken = 1;
        std::string merged = tokens[i];
        const std::size_t limit = std::min(max_span, tokens.size() - i);
        std::string joined = tokens[i];
        for (std::size_t span = 2; span <= limit; ++span) {
            joined += "_";
            joined += tokens[i + span - 1];
            if (table.lookup(joined)) {
                taken = span;
                merged = joined;
            }
        }
        out.push_back(std::move(merged));
        i += taken;
    }
    return out;
}

// Numeric tokens split into single digits; the mode controls which digits
// become English words.
inline std::vector<std::string> digits_to_words(const std::vector<std::string>& tokens,
                                                DigitMode mode = DigitMode::split01) {
    static const char* names[10] = {"zero", "one", "two",   "three", "four",
                                    "five", "six", "seven", "eight", "nine"};
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (!detail::all_digits(tok)) {
            out.push_back(tok);
            continue;
        }
        for (char c : tok) {
            const int d = c - '0';
            switch (mode) {
                case DigitMode::literal:
                    out.emplace_back(1, c);
                    break;
                case DigitMode::words:
                    out.emplace_back(names[d]);
                    break;
                case DigitMode::split01:
                    if (d <= 1) {
                        out.emplace_back(1, c);
                    } else {
                        out.emplace_back(names[d]);
                    }
                    break;
            }
        }
    }
    return out;
}

// The full per-line pipeline.
template <typename T>
std::vector<std::string> preprocess_line(const std::string& line, const EmbeddingTable<T>& table,
                                         const PipelineConfig& cfg) {
    auto tokens = tokenize(normalize_ascii(line));
    tokens = standardize_punctuation(tokens, cfg.punctuation);
    tokens = merge_phrases(tokens, table);
    return digits_to_words(tokens, cfg.digit_mode);
}

// Maps tokens to ids (unknown -> UNK) and appends EOS.
template <typename T>
std::vector<std::uint32_t> encode_tokens(const std::vector<std::string>& tokens,
                                         const EmbeddingTable<T>& table) {
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size() + 1);
    const std::uint32_t unk = static_cast<std::uint32_t>(table.unk_id());
    for (const auto& tok : tokens) {
        const auto id = table.lookup(tok);
        ids.push_back(id ? static_cast<std::uint32_t>(*id) : unk);
    }
    ids.push_back(static_cast<std::uint32_t>(table.eos_id()));
    return ids;
}

// Token-id files: header "RRAE-TOK1 <vocab-hash>", then one space-separated
// id sequence per line.
template <typename T>
void write_token_file(const std::string& path,
                      const std::vector<std::vector<std::uint32_t>>& sequences,
                      const EmbeddingTable<T>& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "RRAE-TOK1 " << table.vocab_hash() << "\n";
    for (const auto& seq : sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i) out << " ";
            out << seq[i];
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<std::vector<std::uint32_t>> read_token_file(
    const std::string& path, const std::string& expected_vocab_hash = "") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open token file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
    {
        std::istringstream hs(line);
        std::string magic, hash;
        if (!(hs >> magic >> hash) || magic != "RRAE-TOK1") {
            throw ParseError(path + ":1: expected header \"RRAE-TOK1 <vocab-hash>\"");
        }
        if (!expected_vocab_hash.empty() && hash != expected_vocab_hash) {
            throw ValidationError(path + ": vocab hash " + hash +
                                  " does not match the supplied table (" + expected_vocab_hash + ")");
        }
    }
    std::vector<std::vector<std::uint32_t>> sequences;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::uint32_t> seq;
        std::uint64_t id;
        while (ls >> id) seq.push_back(static_cast<std::uint32_t>(id));
        if (!ls.eof()) throw ParseError(path + ":" + std::to_string(lineno) + ": bad token id");
        if (seq.empty()) continue;
        sequences.push_back(std::move(seq));
    }
    return sequences;
}

struct DatasetFiles {
    std::string train_tok, tune_tok, test_tok;
    std::string train_txt, tune_txt, test_txt;
};

// Full pipeline over the input files: preprocess, exact-string dedup, length
// filter, deterministic seeded split, token-id files plus readable mirrors.
template <typename T>
CorpusStats build_dataset(const std::vector<std::string>& input_paths, const PipelineConfig& cfg,
                          const EmbeddingTable<T>& table, const std::string& out_dir,
                          DatasetFiles* files_out = nullptr) {
    cfg.validate();
    table.eos_id(); // demand specials up front
    table.unk_id();

    CorpusStats stats;
    std::vector<std::vector<std::string>> kept;
    std::unordered_set<std::string> seen;
    for (const auto& path : input_paths) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open input file: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            ++stats.sentences_seen;
            auto tokens = preprocess_line(line, table, cfg);
            if (tokens.empty()) {
                ++stats.empty_removed;
                continue;
            }
            if (tokens.size() > cfg.max_words) {
                ++stats.overlong_removed;
                continue;
            }
            std::string key;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                if (i) key += " ";
                key += tokens[i];
            }
            if (!seen.insert(key).second) {
                ++stats.duplicates_removed;
                continue;
            }
            ++stats.kept;
            stats.total_tokens += tokens.size();
            stats.length_histogram[tokens.size()] += 1;
            for (const auto& tok : tokens) stats.token_histogram[tok] += 1;
            kept.push_back(std::move(tokens));
        }
        if (in.bad()) throw IoError("read failed: " + path + " near line " + std::to_string(lineno));
    }

    Rng rng(cfg.seed);
    rng.shuffle(kept);

    const std::size_t n = kept.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(cfg.train_frac * static_cast<double>(n)));
    std::size_t n_tune = static_cast<std::size_t>(std::llround(cfg.tune_frac * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    n_tune = std::min(n_tune, n - n_train);
    const std::size_t n_test = n - n_train - n_tune;
    stats.train_count = n_train;
    stats.tune_count = n_tune;
    stats.test_count = n_test;

    DatasetFiles files;
    files.train_tok = out_dir + "/train.tok";
    files.tune_tok = out_dir + "/tune.tok";
    files.test_tok = out_dir + "/test.tok";
    files.train_txt = out_dir + "/train.txt";
    files.tune_txt = out_dir + "/tune.txt";
    files.test_txt = out_dir + "/test.txt";

    auto write_split = [&](std::size_t begin, std::size_t end, const std::string& tok_path,
                           const std::string& txt_path) {
        std::vector<std::vector<std::uint32_t>> ids;
        ids.reserve(end - begin);
        std::ofstream txt(txt_path);
        if (!txt) throw IoError("cannot open for writing: " + txt_path);
        for (std::size_t i = begin; i < end; ++i) {
            auto seq = encode_tokens(kept[i], table);
            for (std::size_t j = 0; j + 1 < seq.size(); ++j) {
                if (seq[j] == table.unk_id()) ++stats.unk_tokens;
            }
            ids.push_back(std::move(seq));
            for (std::size_t j = 0; j < kept[i].size(); ++j) {
                if (j) txt << " ";
                txt << kept[i][j];
            }
            txt << "\n";
        }
        if (!txt) throw IoError("write failed: " + txt_path);
        write_token_file(tok_path, ids, table);
    };
    write_split(0, n_train, files.train_tok, files.train_txt);
    write_split(n_train, n_train + n_tune, files.tune_tok, files.tune_txt);
    write_split(n_train + n_tune, n, files.test_tok, files.test_txt);
    if (files_out) *files_out = files;
    return stats;
}

} // namespace rrae
