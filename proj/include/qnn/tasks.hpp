#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qnn::tasks {

struct PairExample {
  std::vector<int> seq_a;
  std::vector<int> seq_b;
  int label = 0;
};

struct TransductionExample {
  std::vector<int> source;
  std::vector<int> target;
};

// --- arithmetic character set -------------------------------------------------

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;

// PAD, BOS, EOS, digits 0-9, then + - * = x y , and space.
std::size_t arithmetic_vocab_size();
int char_to_id(char c);
char id_to_char(int id);
std::vector<int> encode_chars(const std::string& s);
std::string decode_chars(const std::vector<int>& ids);

// --- pairwise sequence classification ------------------------------------------

// Window: positives are copies with a minority of tokens resampled and a
// random window shuffled (at least half the tokens still overlap).
// Copy: positives are verbatim copies, the trivially learnable sub-config
// used for smoke tests.
enum class PairwiseMode { Window, Copy };

PairwiseMode pairwise_mode_from_string(const std::string& s);

// Balanced two-class set: label 1 pairs are derived from seq_a per the
// mode, label 0 pairs are independently sampled. Deterministic per seed.
std::vector<PairExample> gen_pairwise(std::uint64_t seed, std::size_t n, std::size_t vocab,
                                      std::size_t len_min, std::size_t len_max,
                                      PairwiseMode mode = PairwiseMode::Window);

// --- character-level arithmetic transduction ------------------------------------

struct ArithmeticSpec {
  std::size_t min_digits = 1;
  std::size_t max_digits = 3;
  std::string ops = "+-*";
  bool allow_negative = true;
};

// "x=85,y=-523,x*y"
std::string format_arithmetic_source(long long x, long long y, char op);
long long eval_arithmetic(long long x, long long y, char op);

std::vector<TransductionExample> gen_arithmetic(std::uint64_t seed, std::size_t n,
                                                const ArithmeticSpec& spec);

// --- subject-verb agreement ------------------------------------------------------

// Word list; token id is the index into it.
const std::vector<std::string>& sva_vocab();
int sva_word_id(const std::string& word);
bool sva_is_plural_noun(int id);

// Template sentences "the <noun> (<prep> the <noun>)* ___" with up to
// grammar_depth attractor prepositional phrases; the label is the number of
// the head noun (0 singular, 1 plural). seq_b holds the probe token.
std::vector<PairExample> gen_sva(std::uint64_t seed, std::size_t n, std::size_t grammar_depth);

// --- dataset export ---------------------------------------------------------------

// label<TAB>seq_a<TAB>seq_b with space-separated token ids.
void write_pairwise_tsv(const std::string& path, const std::vector<PairExample>& data);
// source<TAB>target as character strings.
void write_transduction_tsv(const std::string& path,
                            const std::vector<TransductionExample>& data);

}  // namespace qnn::tasks
