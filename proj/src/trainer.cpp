#include "cfield/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cfield/metrics.hpp"

namespace cfield {

namespace fs = std::filesystem;

Dtype TrainConfig::dtype() const {
  if (precision == "f32") return Dtype::F32;
  if (precision == "f64") return Dtype::F64;
  fail_config("precision must be 'f32' or 'f64', got '" + precision + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) fail_config("epochs must be positive");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) fail_config("warmup_epochs must be in [0, epochs)");
  if (!(base_lr > 0.0)) fail_config("base_lr must be positive");
  if (batch_size < 1) fail_config("batch_size must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) fail_config("val_fraction must be in [0, 1)");
  if (clip_norm < 0.0) fail_config("clip_norm must be >= 0");
  (void)dtype();
}

double lr_at(int64_t step, int64_t total_steps, int64_t warmup_steps, double base_lr) {
  if (step < 0) fail_internal("lr_at: negative step");
  if (warmup_steps > 0 && step < warmup_steps)
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (step >= total_steps) return 0.0;
  const double t = static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void AdamW::init(const std::vector<NamedParam>& params) {
  step_ = 0;
  m_.clear();
  v_.clear();
  for (const NamedParam& p : params) {
    m_.push_back(Tensor::zeros(p.tensor.shape(), p.tensor.dtype()));
    v_.push_back(Tensor::zeros(p.tensor.shape(), p.tensor.dtype()));
  }
}

namespace {

template <class S>
void adamw_kernel(Tensor& param, const Buffer& grad, Tensor& m, Tensor& v, double lr, double wd, double bc1,
                  double bc2) {
  S* p = param.data<S>();
  const S* g = grad.data<S>();
  S* pm = m.data<S>();
  S* pv = v.data<S>();
  const int64_t n = param.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = AdamW::kBeta1 * static_cast<double>(pm[i]) + (1.0 - AdamW::kBeta1) * gi;
    const double vi = AdamW::kBeta2 * static_cast<double>(pv[i]) + (1.0 - AdamW::kBeta2) * gi * gi;
    pm[i] = static_cast<S>(mi);
    pv[i] = static_cast<S>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    const double update = mhat / (std::sqrt(vhat) + AdamW::kEps) + wd * static_cast<double>(p[i]);
    p[i] = static_cast<S>(static_cast<double>(p[i]) - lr * update);
  }
}

}  // namespace

void AdamW::update(std::vector<NamedParam>& params, const std::vector<Buffer>& grads, double lr,
                   double weight_decay) {
  if (m_.size() != params.size() || grads.size() != params.size())
    fail_internal("AdamW::update: state/grad size mismatch");
  ++step_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].tensor;
    if (p.dtype() == Dtype::F64)
      adamw_kernel<double>(p, grads[i], m_[i], v_[i], lr, weight_decay, bc1, bc2);
    else
      adamw_kernel<float>(p, grads[i], m_[i], v_[i], lr, weight_decay, bc1, bc2);
  }
}

Dataset load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) fail_data("dataset directory '" + dir + "' does not exist");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".csv" || ext == ".jsonl") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  Dataset data;
  for (const std::string& stem : stems) {
    const fs::path base = fs::path(dir) / stem;
    std::string node_path, label_path;
    for (const char* ext : {".csv", ".jsonl"})
      if (fs::exists(base.string() + ext)) {
        node_path = base.string() + ext;
        break;
      }
    for (const char* ext : {".cfg1", ".txt"})
      if (fs::exists(base.string() + ext)) {
        label_path = base.string() + ext;
        break;
      }
    if (label_path.empty()) {
      log_warn("dataset: no label for '" + node_path + "', skipping");
      continue;
    }
    TrainSample sample;
    sample.name = stem;
    sample.nodes = parse_nodes(node_path);
    sample.label = load_grid(label_path);
    data.samples.push_back(std::move(sample));
  }
  if (data.samples.empty()) fail_data("dataset directory '" + dir + "' contains no usable samples");
  return data;
}

void split_dataset(const Dataset& data, const TrainConfig& config, std::vector<int64_t>& train_idx,
                   std::vector<int64_t>& val_idx) {
  std::vector<int64_t> order(static_cast<size_t>(data.size()));
  std::iota(order.begin(), order.end(), int64_t{0});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const int64_t n_val = static_cast<int64_t>(std::llround(config.val_fraction * static_cast<double>(data.size())));
  val_idx.assign(order.begin(), order.begin() + n_val);
  train_idx.assign(order.begin() + n_val, order.end());
  if (train_idx.empty()) fail_data("train split is empty; lower val_fraction or add samples");
}

namespace {

struct MemberResult {
  double loss = 0.0;
  std::vector<Buffer> grads;
};

// One sample forward/backward on a private model clone; grads come back in
// registry order.
MemberResult run_member(Model& worker_model, const TrainSample& sample, const LdsWeightTable& lds) {
  MemberResult result;
  Tape tape;
  Tensor pred = worker_model.forward(&tape, sample.nodes);
  if (pred.dim(0) != sample.label.h || pred.dim(1) != sample.label.w)
    fail_data("sample '" + sample.name + "': label " + std::to_string(sample.label.w) + "x" +
              std::to_string(sample.label.h) + " does not match model resolution");
  Tensor loss = ops::weighted_mse(&tape, pred, sample.label.values, lds.weights_for(sample.label));
  result.loss = loss.item();
  tape.backward(loss);
  for (NamedParam& p : worker_model.params()) {
    result.grads.push_back(p.tensor.grad());  // copies the buffer
    p.tensor.zero_grad();
  }
  return result;
}

template <class S>
void accumulate(Buffer& acc, const Buffer& g) {
  S* pa = acc.data<S>();
  const S* pg = g.data<S>();
  for (int64_t i = 0; i < acc.size(); ++i) pa[i] += pg[i];
}

template <class S>
void scale_buffer(Buffer& b, double s) {
  S* p = b.data<S>();
  for (int64_t i = 0; i < b.size(); ++i) p[i] = static_cast<S>(static_cast<double>(p[i]) * s);
}

double buffer_sqsum(const Buffer& b) {
  double acc = 0.0;
  for (int64_t i = 0; i < b.size(); ++i) {
    const double v = b.at(i);
    acc += v * v;
  }
  return acc;
}

}  // namespace

void train_model(TrainState& state, const Dataset& data, const TrainConfig& config,
                 const std::function<void(const TrainState&, const EpochStats&)>& on_epoch,
                 int64_t stop_after_epoch) {
  config.validate();
  Model& model = state.model;

  std::vector<int64_t> train_idx, val_idx;
  split_dataset(data, config, train_idx, val_idx);

  if (!state.optimizer.initialized()) state.optimizer.init(model.params());

  if (state.next_epoch == 0) {
    if (config.lds) {
      std::vector<const LabelGrid*> labels;
      for (int64_t idx : train_idx) labels.push_back(&data.samples[static_cast<size_t>(idx)].label);
      LdsConfig lds_cfg;
      lds_cfg.enabled = true;
      lds_cfg.bin_width = config.lds_bin_width;
      lds_cfg.kernel_size = config.lds_kernel;
      lds_cfg.sigma = config.lds_sigma;
      model.lds() = LdsWeightTable::build(labels, lds_cfg);
    } else {
      model.lds() = LdsWeightTable::uniform();
    }
  }

  std::mt19937_64 master_rng(config.seed);
  if (!state.rng_state.empty()) {
    std::istringstream in(state.rng_state);
    in >> master_rng;
    if (!in) fail_data("corrupt RNG state in checkpoint");
  }

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(train_idx.size()) + config.batch_size - 1) / config.batch_size;
  const int64_t total_steps = steps_per_epoch * config.epochs;
  const int64_t warmup_steps = steps_per_epoch * config.warmup_epochs;

  const int workers = std::max(1, std::min(thread_count(), config.batch_size));
  log_info("training: " + std::to_string(train_idx.size()) + " train / " + std::to_string(val_idx.size()) +
           " val samples, " + std::to_string(steps_per_epoch) + " steps/epoch, " + std::to_string(workers) +
           " worker(s), " + std::to_string(model.param_count()) + " parameters");

  for (int64_t epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    const uint64_t epoch_seed = master_rng();
    std::vector<int64_t> order = train_idx;
    std::mt19937_64 erng(epoch_seed);
    std::shuffle(order.begin(), order.end(), erng);

    double epoch_loss = 0.0;
    double last_lr = 0.0;
    int64_t batches = 0;
    for (int64_t start = 0; start < static_cast<int64_t>(order.size()); start += config.batch_size) {
      const int64_t members =
          std::min<int64_t>(config.batch_size, static_cast<int64_t>(order.size()) - start);
      std::vector<MemberResult> results(static_cast<size_t>(members));

      auto worker_fn = [&](int worker_id) {
        Model worker_model = model.clone();
        for (int64_t mem = worker_id; mem < members; mem += workers) {
          const TrainSample& sample = data.samples[static_cast<size_t>(order[static_cast<size_t>(start + mem)])];
          results[static_cast<size_t>(mem)] = run_member(worker_model, sample, model.lds());
        }
      };
      if (workers == 1 || members == 1) {
        worker_fn(0);
      } else {
        std::vector<std::thread> pool;
        for (int wkr = 0; wkr < workers; ++wkr) pool.emplace_back(worker_fn, wkr);
        for (auto& th : pool) th.join();
      }

      // member-ordered reduction keeps results independent of worker count
      std::vector<Buffer> grads = std::move(results[0].grads);
      double batch_loss = results[0].loss;
      for (int64_t mem = 1; mem < members; ++mem) {
        for (size_t i = 0; i < grads.size(); ++i) {
          if (grads[i].dtype() == Dtype::F64)
            accumulate<double>(grads[i], results[static_cast<size_t>(mem)].grads[i]);
          else
            accumulate<float>(grads[i], results[static_cast<size_t>(mem)].grads[i]);
        }
        batch_loss += results[static_cast<size_t>(mem)].loss;
      }
      batch_loss /= static_cast<double>(members);
      if (!std::isfinite(batch_loss)) {
        std::string names;
        for (int64_t mem = 0; mem < members; ++mem)
          names += (mem ? ", " : "") + data.samples[static_cast<size_t>(order[static_cast<size_t>(start + mem)])].name;
        fail_internal("NaN/Inf loss at epoch " + std::to_string(epoch) + " step " +
                      std::to_string(state.optimizer.step()) + "; batch: " + names);
      }
      const double inv_members = 1.0 / static_cast<double>(members);
      for (Buffer& g : grads) {
        if (g.dtype() == Dtype::F64)
          scale_buffer<double>(g, inv_members);
        else
          scale_buffer<float>(g, inv_members);
      }

      if (config.clip_norm > 0.0) {
        double sq = 0.0;
        for (const Buffer& g : grads) sq += buffer_sqsum(g);
        const double norm = std::sqrt(sq);
        if (norm > config.clip_norm) {
          const double s = config.clip_norm / norm;
          for (Buffer& g : grads) {
            if (g.dtype() == Dtype::F64)
              scale_buffer<double>(g, s);
            else
              scale_buffer<float>(g, s);
          }
        }
      }

      last_lr = lr_at(state.optimizer.step(), total_steps, warmup_steps, config.base_lr);
      state.optimizer.update(model.params(), grads, last_lr, config.weight_decay);
      epoch_loss += batch_loss;
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(std::max<int64_t>(1, batches));
    stats.lr = last_lr;
    stats.val_pearson = std::numeric_limits<double>::quiet_NaN();
    if (!val_idx.empty()) {
      double total = 0.0;
      int64_t counted = 0;
      for (int64_t idx : val_idx) {
        const TrainSample& sample = data.samples[static_cast<size_t>(idx)];
        const double r = pearson(model.predict(sample.nodes).values, sample.label.values);
        if (std::isfinite(r)) {
          total += r;
          ++counted;
        }
      }
      if (counted > 0) stats.val_pearson = total / static_cast<double>(counted);
    }

    state.history.push_back(stats);
    state.next_epoch = epoch + 1;
    std::ostringstream rng_out;
    rng_out << master_rng;
    state.rng_state = rng_out.str();
    const bool improved =
        std::isfinite(stats.val_pearson) ? (state.best_epoch < 0 || stats.val_pearson > state.best_val) : true;
    if (improved) {
      state.best_val = std::isfinite(stats.val_pearson) ? stats.val_pearson : 0.0;
      state.best_epoch = epoch;
    }
    std::ostringstream line;
    line << "epoch " << epoch << " loss " << stats.train_loss;
    if (std::isfinite(stats.val_pearson)) line << " val_pearson " << stats.val_pearson;
    log_info(line.str());
    if (on_epoch) on_epoch(state, stats);
    if (stop_after_epoch >= 0 && epoch >= stop_after_epoch) {
      log_info("stopping after epoch " + std::to_string(epoch) + " as requested");
      break;
    }
  }
}

std::string history_to_json(const std::vector<EpochStats>& history) {
  nlohmann::json doc = nlohmann::json::array();
  for (const EpochStats& s : history) {
    nlohmann::json row;
    row["epoch"] = s.epoch;
    row["loss"] = s.train_loss;
    row["lr"] = s.lr;
    if (std::isfinite(s.val_pearson)) row["val_pearson"] = s.val_pearson;
    doc.push_back(row);
  }
  return doc.dump(2);
}

}  // namespace cfield
