#include "qnn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "qnn/checkpoint.hpp"
#include "qnn/error.hpp"
#include "qnn/rng.hpp"

namespace qnn::train {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError("config field '" + key + "': expected an unsigned integer, got '" + value +
                     "'");
  }
}

double parse_f64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError("config field '" + key + "': expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config field '" + key + "': expected true|false, got '" + value + "'");
}

}  // namespace

std::string TrainConfig::resolved_variant() const {
  if (!variant.empty()) return variant;
  return model == "qatt" ? "quaternion" : "full";
}

void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "task") cfg.task = value;
  else if (key == "model") cfg.model = value;
  else if (key == "variant") cfg.variant = value;
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "steps") cfg.steps = parse_u64(key, value);
  else if (key == "eval_every") cfg.eval_every = parse_u64(key, value);
  else if (key == "target_metric") cfg.target_metric = parse_f64(key, value);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "d") cfg.d = parse_u64(key, value);
  else if (key == "hidden") cfg.hidden = parse_u64(key, value);
  else if (key == "layers") cfg.layers = parse_u64(key, value);
  else if (key == "heads") cfg.heads = parse_u64(key, value);
  else if (key == "ffn_hidden") cfg.ffn_hidden = parse_u64(key, value);
  else if (key == "max_len") cfg.max_len = parse_u64(key, value);
  else if (key == "act") cfg.act = value;
  else if (key == "init") cfg.init = value;
  else if (key == "share_compare") cfg.share_compare = parse_bool(key, value);
  else if (key == "embed_projection") cfg.embed_projection = parse_bool(key, value);
  else if (key == "lr") cfg.lr = parse_f64(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_u64(key, value);
  else if (key == "expert") cfg.expert = parse_bool(key, value);
  else if (key == "train_n") cfg.train_n = parse_u64(key, value);
  else if (key == "val_n") cfg.val_n = parse_u64(key, value);
  else if (key == "val_from_train") cfg.val_from_train = parse_bool(key, value);
  else if (key == "vocab") cfg.vocab = parse_u64(key, value);
  else if (key == "len_min") cfg.len_min = parse_u64(key, value);
  else if (key == "len_max") cfg.len_max = parse_u64(key, value);
  else if (key == "pairwise_mode") cfg.pairwise_mode = value;
  else if (key == "digits_min") cfg.digits_min = parse_u64(key, value);
  else if (key == "digits_max") cfg.digits_max = parse_u64(key, value);
  else if (key == "ops") cfg.ops = value;
  else if (key == "allow_negative") cfg.allow_negative = parse_bool(key, value);
  else if (key == "sva_depth") cfg.sva_depth = parse_u64(key, value);
  else throw UsageError("unknown config field '" + key + "'");
}

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments and whitespace
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[' && line.back() == ']') continue;  // section header
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto kl = key.find_last_not_of(" \t");
    key = key.substr(0, kl + 1);
    const auto vf = value.find_first_not_of(" \t");
    value = vf == std::string::npos ? "" : value.substr(vf);
    apply_config_kv(cfg, key, value);
  }
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string render_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "task=" << cfg.task << "\n";
  out << "model=" << cfg.model << "\n";
  out << "variant=" << cfg.resolved_variant() << "\n";
  out << "seed=" << cfg.seed << "\n";
  out << "steps=" << cfg.steps << "\n";
  out << "eval_every=" << cfg.eval_every << "\n";
  out << "target_metric=" << fmt_double(cfg.target_metric) << "\n";
  out << "[model]\n";
  out << "d=" << cfg.d << "\n";
  out << "hidden=" << cfg.hidden << "\n";
  out << "layers=" << cfg.layers << "\n";
  out << "heads=" << cfg.heads << "\n";
  out << "ffn_hidden=" << cfg.ffn_hidden << "\n";
  out << "max_len=" << cfg.max_len << "\n";
  out << "act=" << cfg.act << "\n";
  out << "init=" << cfg.init << "\n";
  out << "share_compare=" << (cfg.share_compare ? "true" : "false") << "\n";
  out << "embed_projection=" << (cfg.embed_projection ? "true" : "false") << "\n";
  out << "[optimizer]\n";
  out << "lr=" << fmt_double(cfg.lr) << "\n";
  out << "batch_size=" << cfg.batch_size << "\n";
  out << "expert=" << (cfg.expert ? "true" : "false") << "\n";
  out << "[data]\n";
  out << "train_n=" << cfg.train_n << "\n";
  out << "val_n=" << cfg.val_n << "\n";
  out << "val_from_train=" << (cfg.val_from_train ? "true" : "false") << "\n";
  out << "vocab=" << cfg.vocab << "\n";
  out << "len_min=" << cfg.len_min << "\n";
  out << "len_max=" << cfg.len_max << "\n";
  out << "pairwise_mode=" << cfg.pairwise_mode << "\n";
  out << "digits_min=" << cfg.digits_min << "\n";
  out << "digits_max=" << cfg.digits_max << "\n";
  out << "ops=" << cfg.ops << "\n";
  out << "allow_negative=" << (cfg.allow_negative ? "true" : "false") << "\n";
  out << "sva_depth=" << cfg.sva_depth << "\n";
  return out.str();
}

void validate(const TrainConfig& cfg) {
  if (cfg.task != "pairwise" && cfg.task != "arithmetic" && cfg.task != "sva") {
    throw UsageError("config field 'task': expected pairwise|arithmetic|sva, got '" + cfg.task +
                     "'");
  }
  if (cfg.model != "qatt" && cfg.model != "qtransformer") {
    throw UsageError("config field 'model': expected qatt|qtransformer, got '" + cfg.model + "'");
  }
  const std::string variant = cfg.resolved_variant();
  if (cfg.model == "qatt") {
    if (variant != "quaternion" && variant != "real") {
      throw UsageError("config field 'variant': qatt expects quaternion|real, got '" + variant +
                       "'");
    }
    if (cfg.task == "arithmetic") {
      throw UsageError("config field 'task': arithmetic transduction requires model=qtransformer");
    }
  } else {
    if (variant != "real" && variant != "partial" && variant != "full") {
      throw UsageError("config field 'variant': qtransformer expects real|partial|full, got '" +
                       variant + "'");
    }
    if (cfg.task != "arithmetic") {
      throw UsageError("config field 'task': model=qtransformer trains on task=arithmetic");
    }
  }
  if (!cfg.expert) {
    if (cfg.lr != 1e-3 && cfg.lr != 3e-4) {
      throw UsageError(
          "config field 'lr': tuned grid is {0.001, 0.0003}; set expert=true to override");
    }
    if (cfg.batch_size != 32 && cfg.batch_size != 64) {
      throw UsageError(
          "config field 'batch_size': tuned grid is {32, 64}; set expert=true to override");
    }
  }
  if (cfg.batch_size < 1) throw UsageError("config field 'batch_size': must be >= 1");
  if (cfg.eval_every < 1) throw UsageError("config field 'eval_every': must be >= 1");
  if (cfg.train_n < 1) throw UsageError("config field 'train_n': must be >= 1");
  if (cfg.val_n < 1) throw UsageError("config field 'val_n': must be >= 1");
  if (cfg.len_min < 1 || cfg.len_max < cfg.len_min) {
    throw UsageError("config fields 'len_min'/'len_max': need 1 <= len_min <= len_max");
  }
  (void)tasks::pairwise_mode_from_string(cfg.pairwise_mode);
  (void)activation_from_string(cfg.act);
  (void)init_scheme_from_string(cfg.init);
}

std::string RunReport::render() const {
  std::ostringstream out;
  out << "steps_run=" << steps_run << "\n";
  out << "final_loss=" << fmt_double(final_loss) << "\n";
  out << metric_name << "=" << fmt_double(final_metric) << "\n";
  out << "reached_target=" << (reached_target ? "true" : "false") << "\n";
  out << "param_total=" << param_total << "\n";
  out << "transform_weight_params=" << transform_weight_params << "\n";
  out << "reference_transform_weight_params=" << reference_transform_weight_params << "\n";
  out << "transform_weight_ratio=" << fmt_double(transform_ratio) << "\n";
  out << "wall_seconds=" << fmt_double(wall_seconds) << "\n";
  out << "checkpoint=" << checkpoint_path << "\n";
  return out.str();
}

namespace {

struct AdamState {
  std::vector<Array> m;
  std::vector<Array> v;
  std::size_t t = 0;

  explicit AdamState(const ParamStore& store) {
    for (std::size_t k = 0; k < store.size(); ++k) {
      const ParamInfo& i = store.info(static_cast<int>(k));
      m.emplace_back(i.rows, i.cols, 0.0);
      v.emplace_back(i.rows, i.cols, 0.0);
    }
  }

  void step(ParamStore& store, const TapeBinding& binding, const ad::Tape& tape, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < store.size(); ++k) {
      const Array& g = tape.grad(binding.var(static_cast<int>(k)));
      auto md = m[k].data();
      auto vd = v[k].data();
      auto pd = store.value(static_cast<int>(k)).data();
      auto gd = g.data();
      for (std::size_t e = 0; e < pd.size(); ++e) {
        md[e] = beta1 * md[e] + (1.0 - beta1) * gd[e];
        vd[e] = beta2 * vd[e] + (1.0 - beta2) * gd[e] * gd[e];
        const double mhat = md[e] / bc1;
        const double vhat = vd[e] / bc2;
        pd[e] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

// Callbacks a task/model pairing plugs into the shared loop.
struct TrainHooks {
  // builds the mean batch loss graph for the given example indices
  std::function<ad::Var(ad::Tape&, const TapeBinding&, const std::vector<std::size_t>&)>
      batch_loss;
  // full validation metric with current parameters
  std::function<double()> eval_metric;
  std::size_t train_size = 0;
};

ad::Var mean_of(std::vector<ad::Var> losses) {
  ad::Var total = losses[0];
  for (std::size_t k = 1; k < losses.size(); ++k) total = ad::add(total, losses[k]);
  return ad::scale(total, 1.0 / static_cast<double>(losses.size()));
}

RunReport run_training(const TrainConfig& cfg, ParamStore& store, const TrainHooks& hooks,
                       const std::string& metric_name) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.metric_name = metric_name;

  SplitMix64 batch_rng(SplitMix64::mix(cfg.seed, 4));
  SplitMix64 probe_rng(SplitMix64::mix(cfg.seed, 5));
  AdamState adam(store);

  auto sample_batch = [&](SplitMix64& rng) {
    std::vector<std::size_t> idx(cfg.batch_size);
    for (auto& i : idx) i = rng.below(hooks.train_size);
    return idx;
  };
  auto loss_only = [&](const std::vector<std::size_t>& idx) {
    ad::Tape tape;
    TapeBinding binding = bind_params(tape, store, /*trainable=*/false);
    ad::Var loss = hooks.batch_loss(tape, binding, idx);
    return tape.value(loss)[0];
  };

  // step-0 row: initial loss on a probe batch plus the initial metric
  double last_loss = loss_only(sample_batch(probe_rng));
  double metric = hooks.eval_metric();
  report.curve.push_back({0, last_loss, metric});
  bool stop = cfg.target_metric > 0.0 && metric >= cfg.target_metric;
  if (stop) report.reached_target = true;

  std::size_t step = 0;
  while (!stop && step < cfg.steps) {
    ++step;
    ad::Tape tape;
    TapeBinding binding = bind_params(tape, store);
    ad::Var loss = hooks.batch_loss(tape, binding, sample_batch(batch_rng));
    last_loss = tape.value(loss)[0];
    tape.backward(loss);
    adam.step(store, binding, tape, cfg.lr);

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      metric = hooks.eval_metric();
      report.curve.push_back({step, last_loss, metric});
      if (cfg.target_metric > 0.0 && metric >= cfg.target_metric) {
        report.reached_target = true;
        stop = true;
      }
    }
  }

  report.steps_run = step;
  report.final_loss = last_loss;
  report.final_metric = report.curve.back().metric;
  report.param_total = store.total_count();
  report.transform_weight_params = transform_weight_count(store);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct PairTask {
  std::vector<tasks::PairExample> train;
  std::vector<tasks::PairExample> val;
  std::unique_ptr<QAttModel> model;
};

PairTask setup_pair_task(const TrainConfig& cfg) {
  PairTask t;
  const std::uint64_t train_seed = SplitMix64::mix(cfg.seed, 1);
  const std::uint64_t val_seed = SplitMix64::mix(cfg.seed, 2);
  if (cfg.task == "pairwise") {
    const auto mode = tasks::pairwise_mode_from_string(cfg.pairwise_mode);
    t.train = tasks::gen_pairwise(train_seed, cfg.train_n, cfg.vocab, cfg.len_min, cfg.len_max,
                                  mode);
    t.val = tasks::gen_pairwise(val_seed, cfg.val_n, cfg.vocab, cfg.len_min, cfg.len_max, mode);
  } else {
    t.train = tasks::gen_sva(train_seed, cfg.train_n, cfg.sva_depth);
    t.val = tasks::gen_sva(val_seed, cfg.val_n, cfg.sva_depth);
  }
  if (cfg.val_from_train) t.val = t.train;

  QAttConfig mc;
  mc.d = cfg.d;
  mc.hidden_q = cfg.hidden;
  mc.num_classes = 2;
  mc.vocab = cfg.task == "pairwise" ? cfg.vocab : tasks::sva_vocab().size();
  mc.act = activation_from_string(cfg.act);
  mc.share_compare = cfg.share_compare;
  mc.embed_projection = cfg.embed_projection;
  mc.init = init_scheme_from_string(cfg.init);
  mc.seed = SplitMix64::mix(cfg.seed, 3);
  t.model = std::make_unique<QAttModel>(mc);
  return t;
}

struct TransTask {
  std::vector<tasks::TransductionExample> train;
  std::vector<tasks::TransductionExample> val;
  std::unique_ptr<QTransformer> model;
};

TransTask setup_trans_task(const TrainConfig& cfg) {
  TransTask t;
  tasks::ArithmeticSpec spec;
  spec.min_digits = cfg.digits_min;
  spec.max_digits = cfg.digits_max;
  spec.ops = cfg.ops;
  spec.allow_negative = cfg.allow_negative;
  t.train = tasks::gen_arithmetic(SplitMix64::mix(cfg.seed, 1), cfg.train_n, spec);
  t.val = cfg.val_from_train ? t.train
                             : tasks::gen_arithmetic(SplitMix64::mix(cfg.seed, 2), cfg.val_n,
                                                     spec);

  QTransformerConfig mc;
  mc.variant = variant_from_string(cfg.resolved_variant());
  mc.layers = cfg.layers;
  mc.d_q = cfg.d;
  mc.heads = cfg.heads;
  mc.ffn_hidden = cfg.ffn_hidden;
  mc.vocab = tasks::arithmetic_vocab_size();
  mc.max_len = cfg.max_len;
  mc.init = init_scheme_from_string(cfg.init);
  mc.seed = SplitMix64::mix(cfg.seed, 3);
  t.model = std::make_unique<QTransformer>(mc);
  return t;
}

std::vector<int> with_eos(const std::vector<int>& ids) {
  std::vector<int> out = ids;
  out.push_back(tasks::kEos);
  return out;
}

std::vector<int> with_bos(const std::vector<int>& ids) {
  std::vector<int> out = {tasks::kBos};
  out.insert(out.end(), ids.begin(), ids.end());
  return out;
}

}  // namespace

RunReport cmd_train(const TrainConfig& cfg_in, const std::string& out_dir) {
  TrainConfig cfg = cfg_in;
  cfg.out_dir = out_dir;
  validate(cfg);
  if (cfg.model == "qatt" && cfg.resolved_variant() == "real") {
    throw UsageError(
        "config field 'variant': the real attention baseline exists for parameter comparison "
        "only (params subcommand); training it is out of scope");
  }
  if (out_dir.empty()) throw UsageError("config field 'out_dir': required for training");
  std::filesystem::create_directories(out_dir);

  RunReport report;
  ParamStore* store = nullptr;
  PairTask pair;
  TransTask trans;

  if (cfg.model == "qatt") {
    pair = setup_pair_task(cfg);
    store = &pair.model->params();
    TrainHooks hooks;
    hooks.train_size = pair.train.size();
    hooks.batch_loss = [&](ad::Tape&, const TapeBinding& binding,
                           const std::vector<std::size_t>& idx) {
      std::vector<ad::Var> losses;
      losses.reserve(idx.size());
      for (std::size_t i : idx) {
        const auto& ex = pair.train[i];
        ad::Var logits = pair.model->forward(binding, ex.seq_a, ex.seq_b);
        losses.push_back(ad::cross_entropy_logits(logits, {ex.label}));
      }
      return mean_of(std::move(losses));
    };
    hooks.eval_metric = [&]() {
      std::size_t correct = 0;
      ad::Tape tape;
      TapeBinding binding = bind_params(tape, *store, /*trainable=*/false);
      for (const auto& ex : pair.val) {
        ad::Var logits = pair.model->forward(binding, ex.seq_a, ex.seq_b);
        const Array& lv = tape.value(logits);
        int best = 0;
        for (std::size_t c = 1; c < lv.cols(); ++c) {
          if (lv[c] > lv[best]) best = static_cast<int>(c);
        }
        if (best == ex.label) ++correct;
      }
      return static_cast<double>(correct) / static_cast<double>(pair.val.size());
    };
    report = run_training(cfg, *store, hooks, "accuracy");
    ParamStore ref = build_real_attention_reference(pair.model->config());
    report.reference_transform_weight_params = transform_weight_count(ref);
    report.transform_ratio = static_cast<double>(report.transform_weight_params) /
                             static_cast<double>(report.reference_transform_weight_params);
  } else {
    trans = setup_trans_task(cfg);
    store = &trans.model->params();
    TrainHooks hooks;
    hooks.train_size = trans.train.size();
    hooks.batch_loss = [&](ad::Tape&, const TapeBinding& binding,
                           const std::vector<std::size_t>& idx) {
      std::vector<ad::Var> losses;
      losses.reserve(idx.size());
      for (std::size_t i : idx) {
        const auto& ex = trans.train[i];
        ad::Var logits =
            trans.model->seq2seq_logits(binding, with_eos(ex.source), with_bos(ex.target));
        losses.push_back(ad::cross_entropy_logits(logits, with_eos(ex.target)));
      }
      return mean_of(std::move(losses));
    };
    hooks.eval_metric = [&]() {
      std::size_t exact = 0;
      for (const auto& ex : trans.val) {
        std::vector<int> got = trans.model->greedy_decode(
            with_eos(ex.source), tasks::kBos, tasks::kEos, ex.target.size() + 4);
        if (got == ex.target) ++exact;
      }
      return static_cast<double>(exact) / static_cast<double>(trans.val.size());
    };
    report = run_training(cfg, *store, hooks, "exact_match");
    QTransformerConfig ref_cfg = trans.model->config();
    ref_cfg.variant = TransformerVariant::RealBaseline;
    QTransformer ref(ref_cfg);
    report.reference_transform_weight_params = transform_weight_count(ref.params());
    report.transform_ratio = static_cast<double>(report.transform_weight_params) /
                             static_cast<double>(report.reference_transform_weight_params);
  }

  // artifacts: config echo, metrics, checkpoint, report
  report.config_path = out_dir + "/config.txt";
  {
    std::ofstream out(report.config_path);
    out << render_config(cfg);
    if (!out) throw IoError("cmd_train: cannot write config echo");
  }
  report.metrics_path = out_dir + "/metrics.tsv";
  {
    std::ofstream out(report.metrics_path);
    for (const auto& p : report.curve) {
      out << p.step << '\t' << fmt_double(p.loss) << '\t' << fmt_double(p.metric) << '\n';
    }
    if (!out) throw IoError("cmd_train: cannot write metrics");
  }
  report.checkpoint_path = out_dir + "/model.qnn";
  save_checkpoint(report.checkpoint_path, *store);
  {
    std::ofstream out(out_dir + "/report.txt");
    out << report.render();
  }
  return report;
}

std::string ParamReport::render() const {
  std::ostringstream out;
  out << "model: " << model_label << "\n";
  for (const auto& r : rows) {
    out << "  " << r.name << "  [" << r.rows << "x" << r.cols << "]  " << r.count
        << (r.transform_weight ? "  (transform)" : "") << "\n";
  }
  out << "total_params=" << total << "\n";
  out << "transform_weight_params=" << transform_weights << "\n";
  out << "reference_total_params=" << reference_total << "\n";
  out << "reference_transform_weight_params=" << reference_transform_weights << "\n";
  out << "transform_weight_ratio=" << fmt_double(ratio) << "\n";
  char pct[64];
  std::snprintf(pct, sizeof(pct), "%.1f", 100.0 * (1.0 - ratio));
  out << "transform_weight_saving=-" << pct << "%\n";
  out << "ratio_check=" << (ok ? "pass" : "FAIL") << "\n";
  return out.str();
}

ParamReport cmd_params(const TrainConfig& cfg_in) {
  TrainConfig cfg = cfg_in;
  validate(cfg);
  ParamReport report;
  const std::string variant = cfg.resolved_variant();

  auto fill_rows = [&report](const ParamStore& store) {
    for (std::size_t k = 0; k < store.size(); ++k) {
      const ParamInfo& i = store.info(static_cast<int>(k));
      report.rows.push_back({i.name, i.rows, i.cols, i.count(),
                             i.group == ParamGroup::Transform &&
                                 i.kind == ParamKind::WeightMatrix});
    }
  };

  if (cfg.model == "qatt") {
    QAttConfig mc;
    mc.d = cfg.d;
    mc.hidden_q = cfg.hidden;
    mc.num_classes = 2;
    mc.vocab = cfg.task == "sva" ? tasks::sva_vocab().size() : cfg.vocab;
    mc.share_compare = cfg.share_compare;
    mc.embed_projection = cfg.embed_projection;
    ParamStore ref = build_real_attention_reference(mc);
    report.reference_total = ref.total_count();
    report.reference_transform_weights = transform_weight_count(ref);
    if (variant == "real") {
      report.model_label = "attention reference (real, d=" + std::to_string(4 * cfg.d) + ")";
      fill_rows(ref);
      report.total = ref.total_count();
      report.transform_weights = report.reference_transform_weights;
    } else {
      QAttModel model(mc);
      report.model_label = "quaternion attention (d=" + std::to_string(cfg.d) + ")";
      fill_rows(model.params());
      report.total = model.params().total_count();
      report.transform_weights = transform_weight_count(model.params());
    }
  } else {
    QTransformerConfig mc;
    mc.variant = variant_from_string(variant);
    mc.layers = cfg.layers;
    mc.d_q = cfg.d;
    mc.heads = cfg.heads;
    mc.ffn_hidden = cfg.ffn_hidden;
    mc.vocab = tasks::arithmetic_vocab_size();
    mc.max_len = cfg.max_len;
    QTransformer model(mc);
    QTransformerConfig rc = mc;
    rc.variant = TransformerVariant::RealBaseline;
    QTransformer ref(rc);
    report.model_label = "quaternion transformer (" + variant + ", d_q=" + std::to_string(cfg.d) +
                         ", layers=" + std::to_string(cfg.layers) + ")";
    fill_rows(model.params());
    report.total = model.params().total_count();
    report.transform_weights = transform_weight_count(model.params());
    report.reference_total = ref.params().total_count();
    report.reference_transform_weights = transform_weight_count(ref.params());
  }

  report.ratio = static_cast<double>(report.transform_weights) /
                 static_cast<double>(report.reference_transform_weights);
  report.ratio_exact_quarter = 4 * report.transform_weights == report.reference_transform_weights;
  report.ratio_strictly_between =
      4 * report.transform_weights > report.reference_transform_weights &&
      report.transform_weights < report.reference_transform_weights;

  if (variant == "full" || variant == "quaternion") {
    report.ok = report.ratio_exact_quarter;
  } else if (variant == "partial") {
    report.ok = report.ratio_strictly_between;
  } else {
    report.ok = report.transform_weights == report.reference_transform_weights;
  }
  return report;
}

Decoder::Decoder(const std::string& checkpoint_path) {
  namespace fs = std::filesystem;
  if (!fs::exists(checkpoint_path)) {
    throw IoError("decoder: checkpoint '" + checkpoint_path + "' does not exist");
  }
  const fs::path cfg_path = fs::path(checkpoint_path).parent_path() / "config.txt";
  if (!fs::exists(cfg_path)) {
    throw IoError("decoder: expected run config at '" + cfg_path.string() + "'");
  }
  cfg_ = parse_config_file(cfg_path.string());
  if (cfg_.model != "qtransformer" || cfg_.task != "arithmetic") {
    throw ContractError("decoder: checkpoint is not a transduction transformer run");
  }
  QTransformerConfig mc;
  mc.variant = variant_from_string(cfg_.resolved_variant());
  mc.layers = cfg_.layers;
  mc.d_q = cfg_.d;
  mc.heads = cfg_.heads;
  mc.ffn_hidden = cfg_.ffn_hidden;
  mc.vocab = tasks::arithmetic_vocab_size();
  mc.max_len = cfg_.max_len;
  mc.seed = SplitMix64::mix(cfg_.seed, 3);
  model_ = std::make_unique<QTransformer>(mc);
  load_checkpoint(checkpoint_path, model_->params());
}

std::string Decoder::decode(const std::string& source) const {
  if (source.empty()) throw UsageError("decode: source must be non-empty");
  std::vector<int> src = tasks::encode_chars(source);
  src.push_back(tasks::kEos);
  std::vector<int> out =
      model_->greedy_decode(src, tasks::kBos, tasks::kEos, cfg_.max_len - 2);
  return tasks::decode_chars(out);
}

Decoder::EvalResult Decoder::eval_file(const std::string& dataset_path) const {
  std::ifstream in(dataset_path);
  if (!in) throw IoError("decode eval: cannot open '" + dataset_path + "'");
  EvalResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw IoError("decode eval: malformed line (no tab)");
    const std::string source = line.substr(0, tab);
    const std::string target = line.substr(tab + 1);
    ++result.total;
    if (decode(source) == target) ++result.exact;
  }
  if (result.total == 0) throw IoError("decode eval: dataset is empty");
  result.exact_match = static_cast<double>(result.exact) / static_cast<double>(result.total);
  return result;
}

void cmd_gen_data(const TrainConfig& cfg_in, const std::string& out_path) {
  TrainConfig cfg = cfg_in;
  if (out_path.empty()) throw UsageError("config field 'out_dir': output path required");
  const std::uint64_t seed = SplitMix64::mix(cfg.seed, 1);
  if (cfg.task == "pairwise") {
    tasks::write_pairwise_tsv(
        out_path, tasks::gen_pairwise(seed, cfg.train_n, cfg.vocab, cfg.len_min, cfg.len_max,
                                      tasks::pairwise_mode_from_string(cfg.pairwise_mode)));
  } else if (cfg.task == "sva") {
    tasks::write_pairwise_tsv(out_path, tasks::gen_sva(seed, cfg.train_n, cfg.sva_depth));
  } else if (cfg.task == "arithmetic") {
    tasks::ArithmeticSpec spec;
    spec.min_digits = cfg.digits_min;
    spec.max_digits = cfg.digits_max;
    spec.ops = cfg.ops;
    spec.allow_negative = cfg.allow_negative;
    tasks::write_transduction_tsv(out_path, tasks::gen_arithmetic(seed, cfg.train_n, spec));
  } else {
    throw UsageError("config field 'task': expected pairwise|arithmetic|sva, got '" + cfg.task +
                     "'");
  }
}

}  // namespace qnn::train
