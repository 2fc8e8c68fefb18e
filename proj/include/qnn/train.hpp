#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qnn/qattention.hpp"
#include "qnn/qtransformer.hpp"
#include "qnn/tasks.hpp"

namespace qnn::train {

// Everything a run needs, resolved from defaults, a config file and flag
// overrides. Keys are flat; the file format groups them under sections for
// readability.
struct TrainConfig {
  // run
  std::string task = "pairwise";  // pairwise | arithmetic | sva
  std::string model = "qatt";     // qatt | qtransformer
  std::string variant;            // qatt: quaternion|real; qtransformer: real|partial|full
  std::uint64_t seed = 42;
  std::size_t steps = 1000;
  std::size_t eval_every = 100;
  double target_metric = 0.0;  // stop once the validation metric reaches this (0 = off)
  std::string out_dir;

  // model
  std::size_t d = 8;       // quaternion width (qatt d / transformer d_q)
  std::size_t hidden = 8;  // qatt compare/aggregate width
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t ffn_hidden = 128;  // real units
  std::size_t max_len = 48;
  std::string act = "relu";
  std::string init = "glorot";
  bool share_compare = false;
  bool embed_projection = false;

  // optimizer
  double lr = 1e-3;
  std::size_t batch_size = 32;
  bool expert = false;  // lifts the lr/batch grid restriction

  // data
  std::size_t train_n = 2000;
  std::size_t val_n = 500;
  bool val_from_train = false;  // evaluate on the training set (overfit runs)
  std::size_t vocab = 50;  // pairwise token vocabulary
  std::size_t len_min = 4;
  std::size_t len_max = 8;
  std::string pairwise_mode = "window";
  std::size_t digits_min = 1;
  std::size_t digits_max = 3;
  std::string ops = "+-*";
  bool allow_negative = true;
  std::size_t sva_depth = 2;

  std::string resolved_variant() const;
};

// key=value assignment; throws UsageError naming the field on bad input.
void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value);
TrainConfig parse_config_text(const std::string& text);
TrainConfig parse_config_file(const std::string& path);
std::string render_config(const TrainConfig& cfg);
void validate(const TrainConfig& cfg);

struct CurvePoint {
  std::size_t step = 0;
  double loss = 0.0;
  double metric = 0.0;
};

struct RunReport {
  std::string metric_name;  // "accuracy" or "exact_match"
  double final_loss = 0.0;
  double final_metric = 0.0;
  std::size_t steps_run = 0;
  bool reached_target = false;
  std::size_t param_total = 0;
  std::size_t transform_weight_params = 0;
  std::size_t reference_transform_weight_params = 0;
  double transform_ratio = 0.0;  // exactly 0.25 for fully converted variants
  double wall_seconds = 0.0;
  std::vector<CurvePoint> curve;
  std::string checkpoint_path;
  std::string metrics_path;
  std::string config_path;
  std::string render() const;
};

// Trains per the config, writing config.txt, metrics.tsv, model.qnn and
// report.txt into out_dir.
RunReport cmd_train(const TrainConfig& cfg, const std::string& out_dir);

struct ParamReportRow {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t count = 0;
  bool transform_weight = false;
};

struct ParamReport {
  std::string model_label;
  std::vector<ParamReportRow> rows;
  std::size_t total = 0;
  std::size_t transform_weights = 0;
  std::size_t reference_total = 0;
  std::size_t reference_transform_weights = 0;
  // exact rational check: 4 * transform_weights == reference_transform_weights
  bool ratio_exact_quarter = false;
  bool ratio_strictly_between = false;  // in (0.25, 1.0)
  double ratio = 0.0;
  bool ok = false;  // the variant's expected ratio property holds
  std::string render() const;
};

ParamReport cmd_params(const TrainConfig& cfg);

// Greedy decoding against a trained transduction checkpoint. The run
// directory's config.txt describes the architecture.
class Decoder {
 public:
  explicit Decoder(const std::string& checkpoint_path);

  std::string decode(const std::string& source) const;

  struct EvalResult {
    std::size_t total = 0;
    std::size_t exact = 0;
    double exact_match = 0.0;
  };
  // Scores a source<TAB>target file by per-sequence exact match.
  EvalResult eval_file(const std::string& dataset_path) const;

 private:
  TrainConfig cfg_;
  std::unique_ptr<QTransformer> model_;
};

// Writes the configured task's dataset (train_n examples from the config
// seed) in its line-delimited format.
void cmd_gen_data(const TrainConfig& cfg, const std::string& out_path);

}  // namespace qnn::train
