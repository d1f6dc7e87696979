#include "circuitfield.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "cfield/baseline.hpp"
#include "cfield/checkpoint.hpp"
#include "cfield/config.hpp"
#include "cfield/gradcheck_suites.hpp"
#include "cfield/metrics.hpp"
#include "cfield/model.hpp"
#include "cfield/synthetic.hpp"
#include "cfield/trainer.hpp"

namespace fs = std::filesystem;

struct cf_nodeset {
  cfield::NodeSet set;
};
struct cf_grid {
  cfield::LabelGrid grid;
};
struct cf_model {
  cfield::TrainState state;
};

namespace {

thread_local std::string t_last_error;

template <class Fn>
cf_status wrap(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return CF_OK;
  } catch (const cfield::Error& e) {
    t_last_error = e.what();
    cfield::log_error(e.what());
    return static_cast<cf_status>(static_cast<int>(e.status()));
  } catch (const std::exception& e) {
    t_last_error = e.what();
    cfield::log_error(e.what());
    return CF_ERROR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) cfield::fail_internal(std::string("null argument: ") + what);
}

}  // namespace

extern "C" {

const char* cf_version(void) { return "0.1.0"; }

const char* cf_last_error(void) { return t_last_error.c_str(); }

void cf_set_log_level(int level) {
  cfield::set_log_level(static_cast<cfield::LogLevel>(std::clamp(level, 0, 3)));
}

void cf_set_threads(int n) { cfield::set_thread_count(n); }

cf_status cf_nodeset_read(const char* path, cf_nodeset** out) {
  return wrap([&] {
    require(path && out, "cf_nodeset_read");
    *out = new cf_nodeset{cfield::parse_nodes(path)};
  });
}

cf_status cf_nodeset_write(const cf_nodeset* nodes, const char* path) {
  return wrap([&] {
    require(nodes && path, "cf_nodeset_write");
    cfield::write_nodes(path, nodes->set);
  });
}

int64_t cf_nodeset_size(const cf_nodeset* nodes) { return nodes ? nodes->set.size() : 0; }

void cf_nodeset_free(cf_nodeset* nodes) { delete nodes; }

cf_status cf_grid_read(const char* path, cf_grid** out) {
  return wrap([&] {
    require(path && out, "cf_grid_read");
    *out = new cf_grid{cfield::load_grid(path)};
  });
}

cf_status cf_grid_write(const cf_grid* grid, const char* path, int strict) {
  return wrap([&] {
    require(grid && path, "cf_grid_write");
    cfield::save_grid(path, grid->grid, strict != 0);
  });
}

int64_t cf_grid_width(const cf_grid* grid) { return grid ? grid->grid.w : 0; }
int64_t cf_grid_height(const cf_grid* grid) { return grid ? grid->grid.h : 0; }
const double* cf_grid_values(const cf_grid* grid) { return grid ? grid->grid.values.data() : nullptr; }
void cf_grid_free(cf_grid* grid) { delete grid; }

cf_status cf_synthetic(uint64_t seed, int64_t n_nodes, int64_t n_clusters, int64_t width, int64_t height,
                       cf_nodeset** nodes_out, cf_grid** label_out) {
  return wrap([&] {
    require(nodes_out && label_out, "cf_synthetic");
    cfield::SyntheticSample sample = cfield::gen_synthetic(seed, n_nodes, n_clusters, width, height);
    *nodes_out = new cf_nodeset{std::move(sample.nodes)};
    *label_out = new cf_grid{std::move(sample.label)};
  });
}

namespace {

cfield::AppConfig config_with_overrides(const char* config_json, const cf_train_opts* opts) {
  cfield::AppConfig config = cfield::parse_config(config_json);
  if (opts != nullptr) {
    if (opts->has_seed_override) config.train.seed = static_cast<uint64_t>(opts->seed_override);
    if (opts->precision_override != nullptr) config.train.precision = opts->precision_override;
  }
  config.validate();
  return config;
}

}  // namespace

cf_status cf_train(const char* config_json, const char* data_dir, const char* out_dir, const cf_train_opts* opts) {
  return wrap([&] {
    require(config_json && data_dir && out_dir, "cf_train");
    fs::create_directories(out_dir);

    cfield::TrainState state;
    std::string effective_config;
    if (opts != nullptr && opts->resume_path != nullptr) {
      // the checkpoint's stored config wins so the continued run is exact
      state = cfield::load_checkpoint(opts->resume_path, &effective_config);
      cfield::log_info(std::string("resuming from ") + opts->resume_path + " at epoch " +
                       std::to_string(state.next_epoch));
    } else {
      cfield::AppConfig config = config_with_overrides(config_json, opts);
      effective_config = cfield::config_to_json(config);
      state.model =
          cfield::Model::create(config.encoder, config.decoder, config.train.seed, config.train.dtype());
    }
    const cfield::AppConfig config = cfield::parse_config(effective_config);

    cfield::Dataset data = cfield::load_dataset(data_dir);

    const fs::path out(out_dir);
    auto on_epoch = [&](const cfield::TrainState& s, const cfield::EpochStats&) {
      cfield::save_checkpoint((out / "last.cfck").string(), s, effective_config);
      if (s.best_epoch == s.history.back().epoch)
        cfield::save_checkpoint((out / "model.cfck").string(), s, effective_config);
      std::ofstream hist(out / "history.json");
      hist << cfield::history_to_json(s.history);
    };
    const int64_t stop_after =
        opts != nullptr && opts->max_epochs > 0 ? state.next_epoch + opts->max_epochs - 1 : -1;
    cfield::train_model(state, data, config.train, on_epoch, stop_after);
    if (state.best_epoch < 0) cfield::fail_internal("training produced no epochs");
  });
}

cf_status cf_dry_run(const char* config_json, int64_t* param_count_out) {
  return wrap([&] {
    require(config_json && param_count_out, "cf_dry_run");
    cfield::AppConfig config = cfield::parse_config(config_json);
    cfield::Model model =
        cfield::Model::create(config.encoder, config.decoder, config.train.seed, config.train.dtype());
    *param_count_out = model.param_count();
  });
}

cf_status cf_model_load(const char* path, cf_model** out) {
  return wrap([&] {
    require(path && out, "cf_model_load");
    *out = new cf_model{cfield::load_checkpoint(path)};
  });
}

cf_status cf_model_resolution(const cf_model* model, int64_t* w, int64_t* h) {
  return wrap([&] {
    require(model && w && h, "cf_model_resolution");
    *w = model->state.model.encoder_config().base_w;
    *h = model->state.model.encoder_config().base_h;
  });
}

cf_status cf_model_predict(cf_model* model, const cf_nodeset* nodes, cf_grid** out) {
  return wrap([&] {
    require(model && nodes && out, "cf_model_predict");
    if (nodes->set.size() == 0)
      cfield::log_warn("predicting on an empty node set; output is the bias response");
    *out = new cf_grid{model->state.model.predict(nodes->set)};
  });
}

void cf_model_free(cf_model* model) { delete model; }

namespace {

std::map<std::string, std::string> grid_files(const std::string& dir) {
  if (!fs::is_directory(dir)) cfield::fail_data("'" + dir + "' is not a directory");
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".cfg1" || ext == ".txt") out.emplace(entry.path().stem().string(), entry.path().string());
  }
  return out;
}

}  // namespace

cf_status cf_eval_dirs(const char* pred_dir, const char* label_dir, int pooled, char** json_out,
                       char** table_out) {
  return wrap([&] {
    require(pred_dir && label_dir, "cf_eval_dirs");
    auto preds = grid_files(pred_dir);
    auto labels = grid_files(label_dir);
    std::vector<cfield::LabelGrid> pred_grids, label_grids;
    std::vector<std::string> names;
    for (const auto& [stem, path] : preds) {
      auto it = labels.find(stem);
      if (it == labels.end()) {
        cfield::log_warn("eval: no label for '" + stem + "', excluded");
        continue;
      }
      pred_grids.push_back(cfield::load_grid(path));
      label_grids.push_back(cfield::load_grid(it->second));
      names.push_back(stem);
    }
    for (const auto& [stem, path] : labels)
      if (preds.find(stem) == preds.end()) cfield::log_warn("eval: no prediction for '" + stem + "', excluded");
    cfield::MetricsReport report = cfield::evaluate_dataset(pred_grids, label_grids, names, pooled != 0);
    if (json_out != nullptr) *json_out = dup_string(report.to_json());
    if (table_out != nullptr) *table_out = dup_string(report.to_table());
  });
}

void cf_string_free(char* s) { std::free(s); }

cf_status cf_density_map(const cf_nodeset* nodes, int64_t width, int64_t height, cf_grid** out) {
  return wrap([&] {
    require(nodes && out, "cf_density_map");
    *out = new cf_grid{cfield::cell_density_map(nodes->set, width, height)};
  });
}

cf_status cf_rudy_map(const cf_nodeset* nodes, const char* nets_path, int64_t width, int64_t height,
                      cf_grid** out) {
  return wrap([&] {
    require(nodes && nets_path && out, "cf_rudy_map");
    std::vector<cfield::Net> nets = cfield::parse_nets(nets_path);
    *out = new cf_grid{cfield::rudy_map(nets, nodes->set, width, height)};
  });
}

cf_status cf_gradcheck(const char* module, double tol, char** report_out) {
  return wrap([&] {
    require(module, "cf_gradcheck");
    cfield::SuiteSummary summary = cfield::run_gradcheck_suite(module, tol);
    if (report_out != nullptr) *report_out = dup_string(summary.to_string());
    if (!summary.pass) cfield::fail_internal("gradient checks failed");
  });
}

}  // extern "C"
