// Training and verification harness for the quaternion neural network
// library. Talks to the core exclusively through the C API in qnn.h.
//
// Exit codes: 0 success, 1 verification or metric failure (and other
// runtime errors), 2 usage error.

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "qnn.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int exit_code_for(qnn_status status) {
  if (status == QNN_OK) return kExitOk;
  if (status == QNN_ERR_USAGE) return kExitUsage;
  return kExitFailure;
}

int report_error(qnn_status status) {
  std::fprintf(stderr, "error (%s): %s\n", qnn_status_name(status), qnn_last_error());
  return exit_code_for(status);
}

struct ConfigHandle {
  qnn_config* ptr = qnn_config_create();
  ~ConfigHandle() { qnn_config_free(ptr); }
};

struct ReportHandle {
  qnn_report* ptr = nullptr;
  ~ReportHandle() { qnn_report_free(ptr); }
};

// Collects config-file path plus key=value overrides from flags, applied in
// order: file first, then flags.
struct ConfigArgs {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value config file with [sections]");
    auto kv = [this, cmd](const std::string& flag, const std::string& key, const char* help) {
      cmd->add_option_function<std::string>(
             flag,
             [this, key](const std::string& value) { overrides.emplace_back(key, value); },
             help)
          ->expected(1);
    };
    kv("--task", "task", "pairwise | arithmetic | sva");
    kv("--model", "model", "qatt | qtransformer");
    kv("--variant", "variant", "qatt: quaternion|real; qtransformer: real|partial|full");
    kv("--seed", "seed", "run seed (data, init, batching)");
    kv("--steps", "steps", "optimizer steps");
    kv("--eval-every", "eval_every", "validation cadence in steps");
    kv("--target-metric", "target_metric", "stop when the validation metric reaches this");
    kv("--d", "d", "quaternion width (qatt d / transformer d_q)");
    kv("--hidden", "hidden", "qatt compare/aggregate width");
    kv("--layers", "layers", "transformer layers per stack");
    kv("--heads", "heads", "attention heads");
    kv("--ffn-hidden", "ffn_hidden", "position-wise FFN width (real units)");
    kv("--max-len", "max_len", "maximum sequence length");
    kv("--act", "act", "identity | tanh | relu");
    kv("--init", "init", "glorot | polar");
    kv("--share-compare", "share_compare", "share the two compare layers (true|false)");
    kv("--embed-projection", "embed_projection", "project embeddings through a QFFN");
    kv("--lr", "lr", "learning rate, tuned grid {0.001, 0.0003}");
    kv("--batch-size", "batch_size", "batch size, tuned grid {32, 64}");
    kv("--expert", "expert", "lift the lr/batch grid restriction (true|false)");
    kv("--train-n", "train_n", "training examples");
    kv("--val-n", "val_n", "validation examples");
    kv("--val-from-train", "val_from_train", "evaluate on the training set (overfit runs)");
    kv("--vocab", "vocab", "pairwise token vocabulary");
    kv("--len-min", "len_min", "minimum sequence length (pairwise)");
    kv("--len-max", "len_max", "maximum sequence length (pairwise)");
    kv("--pairwise-mode", "pairwise_mode", "window | copy");
    kv("--digits-min", "digits_min", "minimum operand digits (arithmetic)");
    kv("--digits-max", "digits_max", "maximum operand digits (arithmetic)");
    kv("--ops", "ops", "operator set drawn from +-*");
    kv("--allow-negative", "allow_negative", "allow negative operands (true|false)");
    kv("--sva-depth", "sva_depth", "maximum attractor phrases (sva)");
  }

  qnn_status apply(qnn_config* config) const {
    if (!config_file.empty()) {
      qnn_status status = qnn_config_load(config, config_file.c_str());
      if (status != QNN_OK) return status;
    }
    for (const auto& [key, value] : overrides) {
      qnn_status status = qnn_config_set(config, key.c_str(), value.c_str());
      if (status != QNN_OK) return status;
    }
    return QNN_OK;
  }
};

int run_train(const ConfigArgs& args, const std::string& out_dir, bool target_set) {
  ConfigHandle config;
  qnn_status status = args.apply(config.ptr);
  if (status != QNN_OK) return report_error(status);

  ReportHandle report;
  status = qnn_train(config.ptr, out_dir.c_str(), &report.ptr);
  if (status != QNN_OK) return report_error(status);

  std::fputs(qnn_report_text(report.ptr), stdout);
  double reached = 0.0;
  if (target_set && qnn_report_number(report.ptr, "reached_target", &reached) == QNN_OK &&
      reached == 0.0) {
    std::fprintf(stderr, "target metric not reached\n");
    return kExitFailure;
  }
  return kExitOk;
}

int run_params(const ConfigArgs& args) {
  ConfigHandle config;
  qnn_status status = args.apply(config.ptr);
  if (status != QNN_OK) return report_error(status);

  ReportHandle report;
  status = qnn_params(config.ptr, &report.ptr);
  if (status != QNN_OK) return report_error(status);
  std::fputs(qnn_report_text(report.ptr), stdout);

  double ok = 0.0;
  if (qnn_report_number(report.ptr, "ok", &ok) == QNN_OK && ok == 0.0) {
    std::fprintf(stderr, "parameter-ratio check failed\n");
    return kExitFailure;
  }
  return kExitOk;
}

int run_verify() {
  ReportHandle report;
  qnn_status status = qnn_verify(&report.ptr);
  if (report.ptr != nullptr) std::fputs(qnn_report_text(report.ptr), stdout);
  if (status == QNN_OK) return kExitOk;
  if (status == QNN_ERR_VERIFY) {
    std::fprintf(stderr, "%s\n", qnn_last_error());
    return kExitFailure;
  }
  return report_error(status);
}

int run_decode(const std::string& checkpoint, const std::string& source,
               const std::string& eval_file) {
  qnn_decoder* decoder = nullptr;
  qnn_status status = qnn_decoder_open(checkpoint.c_str(), &decoder);
  if (status != QNN_OK) return report_error(status);
  std::unique_ptr<qnn_decoder, decltype(&qnn_decoder_free)> guard(decoder, &qnn_decoder_free);

  if (!eval_file.empty()) {
    ReportHandle report;
    status = qnn_decode_eval(decoder, eval_file.c_str(), &report.ptr);
    if (status != QNN_OK) return report_error(status);
    std::fputs(qnn_report_text(report.ptr), stdout);
    return kExitOk;
  }
  char* target = nullptr;
  status = qnn_decode(decoder, source.c_str(), &target);
  if (status != QNN_OK) return report_error(status);
  std::printf("%s\n", target);
  qnn_string_free(target);
  return kExitOk;
}

int run_gen_data(const ConfigArgs& args, const std::string& out_path) {
  ConfigHandle config;
  qnn_status status = args.apply(config.ptr);
  if (status != QNN_OK) return report_error(status);
  status = qnn_gen_data(config.ptr, out_path.c_str());
  if (status != QNN_OK) return report_error(status);
  std::printf("wrote %s\n", out_path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quaternion neural network trainer (qnn " + std::string(qnn_version()) + ")"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a model and write a run directory");
  ConfigArgs train_args;
  train_args.add_flags(train);
  std::string train_out;
  train->add_option("--out", train_out, "run output directory")->required();

  auto* params = app.add_subcommand("params", "parameter-count comparison report");
  ConfigArgs params_args;
  params_args.add_flags(params);

  auto* verify = app.add_subcommand("verify", "run the verification suite");

  auto* decode = app.add_subcommand("decode", "greedy-decode with a trained checkpoint");
  std::string checkpoint, source, eval_file;
  decode->add_option("--checkpoint", checkpoint, "path to model.qnn")->required();
  decode->add_option("--source", source, "source string to transduce");
  decode->add_option("--eval", eval_file, "score a source<TAB>target file instead");

  auto* gen = app.add_subcommand("gen-data", "write a generated dataset");
  ConfigArgs gen_args;
  gen_args.add_flags(gen);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (train->parsed()) {
    bool target_set = false;
    for (const auto& [key, value] : train_args.overrides) {
      if (key == "target_metric" && value != "0") target_set = true;
    }
    return run_train(train_args, train_out, target_set);
  }
  if (params->parsed()) return run_params(params_args);
  if (verify->parsed()) return run_verify();
  if (decode->parsed()) {
    if (source.empty() && eval_file.empty()) {
      std::fprintf(stderr, "decode: provide --source or --eval\n");
      return kExitUsage;
    }
    return run_decode(checkpoint, source, eval_file);
  }
  if (gen->parsed()) return run_gen_data(gen_args, gen_out);
  return kExitUsage;
}
