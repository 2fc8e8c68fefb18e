#include "qnn/tasks.hpp"

#include <fstream>

#include "qnn/error.hpp"
#include "qnn/rng.hpp"

namespace qnn::tasks {

namespace {

constexpr const char* kExtraChars = "+-*=xy, ";

long long pow10_ll(std::size_t digits) {
  long long v = 1;
  for (std::size_t k = 0; k < digits; ++k) v *= 10;
  return v;
}

}  // namespace

std::size_t arithmetic_vocab_size() { return 3 + 10 + 8; }

int char_to_id(char c) {
  if (c >= '0' && c <= '9') return 3 + (c - '0');
  for (int k = 0; kExtraChars[k] != '\0'; ++k) {
    if (kExtraChars[k] == c) return 13 + k;
  }
  throw LookupError(std::string("char_to_id: character '") + c + "' not in charset");
}

char id_to_char(int id) {
  if (id >= 3 && id <= 12) return static_cast<char>('0' + (id - 3));
  if (id >= 13 && id <= 20) return kExtraChars[id - 13];
  throw LookupError("id_to_char: id " + std::to_string(id) + " is not a printable character");
}

std::vector<int> encode_chars(const std::string& s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (char c : s) out.push_back(char_to_id(c));
  return out;
}

std::string decode_chars(const std::vector<int>& ids) {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out.push_back(id_to_char(id));
  }
  return out;
}

PairwiseMode pairwise_mode_from_string(const std::string& s) {
  if (s == "window") return PairwiseMode::Window;
  if (s == "copy") return PairwiseMode::Copy;
  throw UsageError("unknown pairwise_mode '" + s + "' (expected window|copy)");
}

std::vector<PairExample> gen_pairwise(std::uint64_t seed, std::size_t n, std::size_t vocab,
                                      std::size_t len_min, std::size_t len_max,
                                      PairwiseMode mode) {
  if (n < 1) throw UsageError("gen_pairwise: n must be >= 1");
  if (len_min < 1 || len_max < len_min) throw UsageError("gen_pairwise: bad length range");
  if (vocab < 2) throw UsageError("gen_pairwise: vocab must be >= 2");

  SplitMix64 rng(seed);
  auto sample_len = [&] { return len_min + rng.below(len_max - len_min + 1); };
  auto sample_seq = [&](std::size_t len) {
    std::vector<int> s(len);
    for (int& t : s) t = static_cast<int>(rng.below(vocab));
    return s;
  };

  std::vector<PairExample> out;
  out.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    PairExample ex;
    ex.label = idx % 2 == 0 ? 1 : 0;
    ex.seq_a = sample_seq(sample_len());
    if (ex.label == 1) {
      ex.seq_b = ex.seq_a;
      if (mode == PairwiseMode::Window && ex.seq_a.size() > 1) {
        const std::size_t len = ex.seq_b.size();
        // resample a strict minority of positions, keeping overlap > half
        const std::size_t k_max = len / 2;
        const std::size_t k = k_max > 0 ? rng.below(k_max) : 0;
        for (std::size_t r = 0; r < k; ++r) {
          ex.seq_b[rng.below(len)] = static_cast<int>(rng.below(vocab));
        }
        // shuffle a contiguous window
        const std::size_t wlen = 2 + rng.below(len - 1);
        const std::size_t start = rng.below(len - wlen + 1);
        for (std::size_t i = wlen - 1; i > 0; --i) {
          const std::size_t j = rng.below(i + 1);
          std::swap(ex.seq_b[start + i], ex.seq_b[start + j]);
        }
      }
    } else {
      ex.seq_b = sample_seq(sample_len());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string format_arithmetic_source(long long x, long long y, char op) {
  return "x=" + std::to_string(x) + ",y=" + std::to_string(y) + ",x" + op + "y";
}

long long eval_arithmetic(long long x, long long y, char op) {
  switch (op) {
    case '+': return x + y;
    case '-': return x - y;
    case '*': return x * y;
    default: throw UsageError(std::string("eval_arithmetic: unsupported op '") + op + "'");
  }
}

std::vector<TransductionExample> gen_arithmetic(std::uint64_t seed, std::size_t n,
                                                const ArithmeticSpec& spec) {
  if (spec.ops.empty()) throw UsageError("gen_arithmetic: ops must be non-empty");
  for (char op : spec.ops) {
    if (op != '+' && op != '-' && op != '*') {
      throw UsageError(std::string("gen_arithmetic: unsupported op '") + op + "'");
    }
  }
  if (spec.min_digits < 1 || spec.max_digits < spec.min_digits || spec.max_digits > 6) {
    throw UsageError("gen_arithmetic: digit range must satisfy 1 <= min <= max <= 6");
  }

  SplitMix64 rng(seed);
  auto sample_value = [&] {
    const std::size_t digits =
        spec.min_digits + rng.below(spec.max_digits - spec.min_digits + 1);
    long long v = static_cast<long long>(rng.below(pow10_ll(digits)));
    if (spec.allow_negative && rng.below(2) == 1) v = -v;
    return v;
  };

  std::vector<TransductionExample> out;
  out.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const long long x = sample_value();
    const long long y = sample_value();
    const char op = spec.ops[rng.below(spec.ops.size())];
    TransductionExample ex;
    ex.source = encode_chars(format_arithmetic_source(x, y, op));
    ex.target = encode_chars(std::to_string(eval_arithmetic(x, y, op)));
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

// word list layout: "the", the probe token, singular/plural noun pairs,
// then prepositions
const std::vector<std::string>& sva_words() {
  static const std::vector<std::string> words = {
      "the",    "___",                                  //
      "key",    "keys",    "cabinet", "cabinets",       //
      "author", "authors", "book",    "books",          //
      "farmer", "farmers", "dog",     "dogs",           //
      "cat",    "cats",    "guard",   "guards",         //
      "letter", "letters", "painting", "paintings",     //
      "to",     "of",      "near",    "behind", "beside"};
  return words;
}

constexpr int kSvaFirstNoun = 2;
constexpr int kSvaNounCount = 20;  // ten singular/plural pairs
constexpr int kSvaFirstPrep = kSvaFirstNoun + kSvaNounCount;
constexpr int kSvaPrepCount = 5;

}  // namespace

const std::vector<std::string>& sva_vocab() { return sva_words(); }

int sva_word_id(const std::string& word) {
  const auto& words = sva_words();
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (words[k] == word) return static_cast<int>(k);
  }
  throw LookupError("sva_word_id: '" + word + "' not in vocabulary");
}

bool sva_is_plural_noun(int id) {
  if (id < kSvaFirstNoun || id >= kSvaFirstNoun + kSvaNounCount) {
    throw LookupError("sva_is_plural_noun: id is not a noun");
  }
  return (id - kSvaFirstNoun) % 2 == 1;
}

std::vector<PairExample> gen_sva(std::uint64_t seed, std::size_t n, std::size_t grammar_depth) {
  SplitMix64 rng(seed);
  const int the = 0, probe = 1;

  auto sample_noun = [&](bool plural) {
    const int pair = static_cast<int>(rng.below(kSvaNounCount / 2));
    return kSvaFirstNoun + 2 * pair + (plural ? 1 : 0);
  };

  std::vector<PairExample> out;
  out.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const bool plural = rng.below(2) == 1;
    PairExample ex;
    ex.label = plural ? 1 : 0;
    ex.seq_a = {the, sample_noun(plural)};
    const std::size_t attractors = grammar_depth > 0 ? rng.below(grammar_depth + 1) : 0;
    for (std::size_t k = 0; k < attractors; ++k) {
      ex.seq_a.push_back(kSvaFirstPrep + static_cast<int>(rng.below(kSvaPrepCount)));
      ex.seq_a.push_back(the);
      ex.seq_a.push_back(sample_noun(rng.below(2) == 1));
    }
    ex.seq_a.push_back(probe);
    ex.seq_b = {probe};
    out.push_back(std::move(ex));
  }
  return out;
}

void write_pairwise_tsv(const std::string& path, const std::vector<PairExample>& data) {
  std::ofstream out(path);
  if (!out) throw IoError("write_pairwise_tsv: cannot open '" + path + "'");
  for (const auto& ex : data) {
    out << ex.label << '\t';
    for (std::size_t k = 0; k < ex.seq_a.size(); ++k) {
      if (k > 0) out << ' ';
      out << ex.seq_a[k];
    }
    out << '\t';
    for (std::size_t k = 0; k < ex.seq_b.size(); ++k) {
      if (k > 0) out << ' ';
      out << ex.seq_b[k];
    }
    out << '\n';
  }
  if (!out) throw IoError("write_pairwise_tsv: write failed");
}

void write_transduction_tsv(const std::string& path,
                            const std::vector<TransductionExample>& data) {
  std::ofstream out(path);
  if (!out) throw IoError("write_transduction_tsv: cannot open '" + path + "'");
  for (const auto& ex : data) {
    out << decode_chars(ex.source) << '\t' << decode_chars(ex.target) << '\n';
  }
  if (!out) throw IoError("write_transduction_tsv: write failed");
}

}  // namespace qnn::tasks
