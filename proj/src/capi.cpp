#include "qnn.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <string>

#include "qnn/error.hpp"
#include "qnn/train.hpp"
#include "qnn/verify.hpp"

struct qnn_config {
  qnn::train::TrainConfig cfg;
};

struct qnn_report {
  std::map<std::string, double> numbers;
  std::map<std::string, std::string> strings;
  std::string text;
};

struct qnn_decoder {
  explicit qnn_decoder(const std::string& path) : impl(path) {}
  qnn::train::Decoder impl;
};

namespace {

thread_local std::string g_last_error;

qnn_status fail(qnn_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs the body, translating exceptions into status codes.
template <typename Fn>
qnn_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const qnn::UsageError& e) {
    return fail(QNN_ERR_USAGE, e.what());
  } catch (const qnn::ShapeError& e) {
    return fail(QNN_ERR_SHAPE, e.what());
  } catch (const qnn::DomainError& e) {
    return fail(QNN_ERR_DOMAIN, e.what());
  } catch (const qnn::ContractError& e) {
    return fail(QNN_ERR_CONTRACT, e.what());
  } catch (const qnn::LookupError& e) {
    return fail(QNN_ERR_LOOKUP, e.what());
  } catch (const qnn::IoError& e) {
    return fail(QNN_ERR_IO, e.what());
  } catch (const qnn::GraphError& e) {
    return fail(QNN_ERR_GRAPH, e.what());
  } catch (const std::exception& e) {
    return fail(QNN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QNN_ERR_INTERNAL, "unknown error");
  }
}

qnn_report* report_from_run(const qnn::train::RunReport& r) {
  auto* report = new qnn_report;
  report->numbers["steps_run"] = static_cast<double>(r.steps_run);
  report->numbers["final_loss"] = r.final_loss;
  report->numbers["final_metric"] = r.final_metric;
  report->numbers["reached_target"] = r.reached_target ? 1.0 : 0.0;
  report->numbers["param_total"] = static_cast<double>(r.param_total);
  report->numbers["transform_weight_params"] = static_cast<double>(r.transform_weight_params);
  report->numbers["reference_transform_weight_params"] =
      static_cast<double>(r.reference_transform_weight_params);
  report->numbers["transform_weight_ratio"] = r.transform_ratio;
  report->numbers["wall_seconds"] = r.wall_seconds;
  report->strings["metric_name"] = r.metric_name;
  report->strings["checkpoint"] = r.checkpoint_path;
  report->strings["metrics"] = r.metrics_path;
  report->strings["config"] = r.config_path;
  report->text = r.render();
  return report;
}

qnn_report* report_from_params(const qnn::train::ParamReport& r) {
  auto* report = new qnn_report;
  report->numbers["total"] = static_cast<double>(r.total);
  report->numbers["transform_weights"] = static_cast<double>(r.transform_weights);
  report->numbers["reference_total"] = static_cast<double>(r.reference_total);
  report->numbers["reference_transform_weights"] =
      static_cast<double>(r.reference_transform_weights);
  report->numbers["ratio"] = r.ratio;
  report->numbers["ratio_exact_quarter"] = r.ratio_exact_quarter ? 1.0 : 0.0;
  report->numbers["ok"] = r.ok ? 1.0 : 0.0;
  report->strings["model"] = r.model_label;
  report->text = r.render();
  return report;
}

}  // namespace

extern "C" {

const char* qnn_version(void) { return "1.0.0"; }

const char* qnn_status_name(qnn_status status) {
  switch (status) {
    case QNN_OK: return "ok";
    case QNN_ERR_USAGE: return "usage error";
    case QNN_ERR_SHAPE: return "shape error";
    case QNN_ERR_DOMAIN: return "domain error";
    case QNN_ERR_CONTRACT: return "contract error";
    case QNN_ERR_LOOKUP: return "lookup error";
    case QNN_ERR_IO: return "io error";
    case QNN_ERR_GRAPH: return "graph error";
    case QNN_ERR_VERIFY: return "verification failure";
    default: return "internal error";
  }
}

const char* qnn_last_error(void) { return g_last_error.c_str(); }

qnn_config* qnn_config_create(void) { return new qnn_config; }

void qnn_config_free(qnn_config* config) { delete config; }

qnn_status qnn_config_set(qnn_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_config_set: null argument");
  }
  return guarded([&] {
    qnn::train::apply_config_kv(config->cfg, key, value);
    return QNN_OK;
  });
}

qnn_status qnn_config_load(qnn_config* config, const char* path) {
  if (config == nullptr || path == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_config_load: null argument");
  }
  return guarded([&] {
    config->cfg = qnn::train::parse_config_file(path);
    return QNN_OK;
  });
}

void qnn_report_free(qnn_report* report) { delete report; }

const char* qnn_report_text(const qnn_report* report) {
  return report == nullptr ? "" : report->text.c_str();
}

qnn_status qnn_report_number(const qnn_report* report, const char* key, double* out) {
  if (report == nullptr || key == nullptr || out == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_report_number: null argument");
  }
  auto it = report->numbers.find(key);
  if (it == report->numbers.end()) {
    return fail(QNN_ERR_LOOKUP, std::string("report has no number '") + key + "'");
  }
  *out = it->second;
  return QNN_OK;
}

const char* qnn_report_string(const qnn_report* report, const char* key) {
  if (report == nullptr || key == nullptr) return nullptr;
  auto it = report->strings.find(key);
  return it == report->strings.end() ? nullptr : it->second.c_str();
}

qnn_status qnn_train(const qnn_config* config, const char* out_dir, qnn_report** out_report) {
  if (config == nullptr || out_dir == nullptr || out_report == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_train: null argument");
  }
  return guarded([&] {
    qnn::train::RunReport r = qnn::train::cmd_train(config->cfg, out_dir);
    *out_report = report_from_run(r);
    return QNN_OK;
  });
}

qnn_status qnn_params(const qnn_config* config, qnn_report** out_report) {
  if (config == nullptr || out_report == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_params: null argument");
  }
  return guarded([&] {
    qnn::train::ParamReport r = qnn::train::cmd_params(config->cfg);
    *out_report = report_from_params(r);
    return QNN_OK;
  });
}

qnn_status qnn_verify(qnn_report** out_report) {
  if (out_report == nullptr) return fail(QNN_ERR_USAGE, "qnn_verify: null argument");
  return guarded([&] {
    qnn::verify::Suite suite = qnn::verify::run_all();
    auto* report = new qnn_report;
    std::size_t failed = 0;
    for (const auto& r : suite.results) {
      report->numbers[r.name] = r.pass ? 1.0 : 0.0;
      if (!r.pass) ++failed;
    }
    report->numbers["checks_total"] = static_cast<double>(suite.results.size());
    report->numbers["checks_failed"] = static_cast<double>(failed);
    report->text = suite.render();
    *out_report = report;
    if (failed != 0) {
      return fail(QNN_ERR_VERIFY, std::to_string(failed) + " verification check(s) failed");
    }
    return QNN_OK;
  });
}

qnn_status qnn_gen_data(const qnn_config* config, const char* out_path) {
  if (config == nullptr || out_path == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_gen_data: null argument");
  }
  return guarded([&] {
    qnn::train::cmd_gen_data(config->cfg, out_path);
    return QNN_OK;
  });
}

qnn_status qnn_decoder_open(const char* checkpoint_path, qnn_decoder** out_decoder) {
  if (checkpoint_path == nullptr || out_decoder == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_decoder_open: null argument");
  }
  return guarded([&] {
    *out_decoder = new qnn_decoder(checkpoint_path);
    return QNN_OK;
  });
}

void qnn_decoder_free(qnn_decoder* decoder) { delete decoder; }

qnn_status qnn_decode(const qnn_decoder* decoder, const char* source, char** out_target) {
  if (decoder == nullptr || source == nullptr || out_target == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_decode: null argument");
  }
  return guarded([&] {
    const std::string target = decoder->impl.decode(source);
    char* buf = static_cast<char*>(std::malloc(target.size() + 1));
    std::memcpy(buf, target.c_str(), target.size() + 1);
    *out_target = buf;
    return QNN_OK;
  });
}

qnn_status qnn_decode_eval(const qnn_decoder* decoder, const char* dataset_path,
                           qnn_report** out_report) {
  if (decoder == nullptr || dataset_path == nullptr || out_report == nullptr) {
    return fail(QNN_ERR_USAGE, "qnn_decode_eval: null argument");
  }
  return guarded([&] {
    auto result = decoder->impl.eval_file(dataset_path);
    auto* report = new qnn_report;
    report->numbers["total"] = static_cast<double>(result.total);
    report->numbers["exact"] = static_cast<double>(result.exact);
    report->numbers["exact_match"] = result.exact_match;
    report->text = "exact_match=" + std::to_string(result.exact_match) + " (" +
                   std::to_string(result.exact) + "/" + std::to_string(result.total) + ")\n";
    *out_report = report;
    return QNN_OK;
  });
}

void qnn_string_free(char* s) { std::free(s); }

}  // extern "C"
