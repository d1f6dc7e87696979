// cf — command-line front end over the circuitfield C API.
//
// Subcommands: gen, train, predict, eval, featurize, gradcheck.
// Exit codes: 0 success, 2 config error, 3 data error, 4 compatibility
// error, 1 internal error.

#include <chrono>
#include <cinttypes>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "circuitfield.h"

namespace {

int fail_with(cf_status status) {
  std::fprintf(stderr, "error: %s\n", cf_last_error());
  return static_cast<int>(status);
}

std::string read_text_file(const std::string& path, bool& ok) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ok = false;
    return {};
  }
  std::ostringstream os;
  os << in.rdbuf();
  ok = true;
  return os.str();
}

int write_grid_outputs(const cf_grid* grid, const std::string& prefix) {
  for (const char* ext : {".cfg1", ".txt", ".pgm"}) {
    const cf_status status = cf_grid_write(grid, (prefix + ext).c_str(), 1);
    if (status != CF_OK) return fail_with(status);
  }
  std::printf("wrote %s.cfg1 / .txt / .pgm\n", prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"circuitfield: congestion prediction from raw placement point clouds"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  int threads = 0;
  int64_t seed = -1;
  std::string precision;
  app.add_option("--threads", threads, "worker threads (default: hardware)");
  app.add_option("--seed", seed, "seed override");
  app.add_option("--precision", precision, "numeric precision: f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}));

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::string gen_out;
  int64_t gen_count = 20, gen_nodes = 1000, gen_clusters = 8, gen_w = 64, gen_h = 0;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--count", gen_count, "number of samples");
  gen->add_option("--nodes", gen_nodes, "nodes per sample");
  gen->add_option("--clusters", gen_clusters, "gaussian clusters per sample");
  gen->add_option("--resolution", gen_w, "grid width (and height unless --height)");
  gen->add_option("--height", gen_h, "grid height");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_config, train_data, train_out, train_resume;
  bool dry_run = false;
  train->add_option("--config", train_config, "JSON config file")->required();
  train->add_option("--data", train_data, "dataset directory");
  train->add_option("--out", train_out, "output directory");
  train->add_option("--resume", train_resume, "checkpoint to continue from");
  train->add_flag("--dry-run", dry_run, "validate config and print the parameter count");
  int64_t train_max_epochs = 0;
  train->add_option("--max-epochs", train_max_epochs,
                    "run at most this many epochs now, then stop resumable (0 = no limit)");

  // predict
  auto* predict = app.add_subcommand("predict", "predict a congestion map");
  std::string pr_model, pr_input, pr_out;
  int64_t pr_resolution = 0;
  predict->add_option("--model", pr_model, "checkpoint file")->required();
  predict->add_option("--input", pr_input, "node file (.csv/.jsonl)")->required();
  predict->add_option("--out", pr_out, "output prefix")->required();
  predict->add_option("--resolution", pr_resolution, "expected grid resolution (checked against the model)");

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against labels");
  std::string ev_pred, ev_label, ev_json;
  bool ev_pooled = false;
  eval->add_option("--pred", ev_pred, "directory of prediction grids")->required();
  eval->add_option("--label", ev_label, "directory of label grids")->required();
  eval->add_option("--json", ev_json, "also write the JSON report here");
  eval->add_flag("--pooled", ev_pooled, "pool all cells into one correlation");

  // featurize
  auto* feat = app.add_subcommand("featurize", "hand-crafted baseline rasters");
  std::string ft_method = "density", ft_input, ft_nets, ft_out;
  int64_t ft_w = 64, ft_h = 0;
  feat->add_option("--method", ft_method, "density or rudy")->check(CLI::IsMember({"density", "rudy"}));
  feat->add_option("--input", ft_input, "node file")->required();
  feat->add_option("--nets", ft_nets, "nets file (.jsonl), required for rudy");
  feat->add_option("--out", ft_out, "output prefix")->required();
  feat->add_option("--resolution", ft_w, "grid width (and height unless --height)");
  feat->add_option("--height", ft_h, "grid height");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_module = "all";
  double gc_tol = 1e-4;
  gc->add_option("--module", gc_module, "all|tensor|encoder|decoder|loss");
  gc->add_option("--tol", gc_tol, "max relative error tolerance");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) cf_set_threads(threads);

  if (gen->parsed()) {
    if (gen_h == 0) gen_h = gen_w;
    const uint64_t base_seed = seed >= 0 ? static_cast<uint64_t>(seed) : 1;
    std::error_code ec;
    std::filesystem::create_directories(gen_out, ec);
    for (int64_t i = 0; i < gen_count; ++i) {
      cf_nodeset* nodes = nullptr;
      cf_grid* label = nullptr;
      const cf_status status =
          cf_synthetic(base_seed + static_cast<uint64_t>(i), gen_nodes, gen_clusters, gen_w, gen_h, &nodes, &label);
      if (status != CF_OK) return fail_with(status);
      char name[64];
      std::snprintf(name, sizeof(name), "sample_%04" PRId64, i);
      const std::string base = gen_out + "/" + name;
      cf_status ws = cf_nodeset_write(nodes, (base + ".csv").c_str());
      if (ws == CF_OK) ws = cf_grid_write(label, (base + ".cfg1").c_str(), 1);
      cf_nodeset_free(nodes);
      cf_grid_free(label);
      if (ws != CF_OK) return fail_with(ws);
    }
    std::printf("wrote %" PRId64 " samples to %s\n", gen_count, gen_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    bool ok = false;
    const std::string config_json = read_text_file(train_config, ok);
    if (!ok) {
      std::fprintf(stderr, "error: cannot read config file %s\n", train_config.c_str());
      return static_cast<int>(CF_ERROR_CONFIG);
    }
    if (dry_run) {
      int64_t params = 0;
      const cf_status status = cf_dry_run(config_json.c_str(), &params);
      if (status != CF_OK) return fail_with(status);
      std::printf("config ok; %" PRId64 " parameters\n", params);
      return 0;
    }
    if (train_data.empty() || train_out.empty()) {
      std::fprintf(stderr, "error: --data and --out are required unless --dry-run\n");
      return static_cast<int>(CF_ERROR_CONFIG);
    }
    cf_train_opts opts{};
    opts.resume_path = train_resume.empty() ? nullptr : train_resume.c_str();
    opts.precision_override = precision.empty() ? nullptr : precision.c_str();
    opts.seed_override = seed;
    opts.has_seed_override = seed >= 0 ? 1 : 0;
    opts.max_epochs = train_max_epochs;
    const cf_status status = cf_train(config_json.c_str(), train_data.c_str(), train_out.c_str(), &opts);
    if (status != CF_OK) return fail_with(status);
    std::printf("training complete; wrote %s/model.cfck\n", train_out.c_str());
    return 0;
  }

  if (predict->parsed()) {
    const auto t0 = std::chrono::steady_clock::now();
    cf_model* model = nullptr;
    cf_status status = cf_model_load(pr_model.c_str(), &model);
    if (status != CF_OK) return fail_with(status);
    if (pr_resolution > 0) {
      int64_t mw = 0, mh = 0;
      cf_model_resolution(model, &mw, &mh);
      if (mw != pr_resolution || mh != pr_resolution) {
        std::fprintf(stderr, "error: model resolution is %" PRId64 "x%" PRId64 ", requested %" PRId64 "\n", mw, mh,
                     pr_resolution);
        cf_model_free(model);
        return static_cast<int>(CF_ERROR_COMPAT);
      }
    }
    cf_nodeset* nodes = nullptr;
    status = cf_nodeset_read(pr_input.c_str(), &nodes);
    if (status != CF_OK) {
      cf_model_free(model);
      return fail_with(status);
    }
    cf_grid* pred = nullptr;
    status = cf_model_predict(model, nodes, &pred);
    if (status != CF_OK) {
      cf_nodeset_free(nodes);
      cf_model_free(model);
      return fail_with(status);
    }
    const int rc = write_grid_outputs(pred, pr_out);
    const auto t1 = std::chrono::steady_clock::now();
    if (rc == 0)
      std::printf("ingest-to-output latency: %.3f s (no preprocessing stage)\n",
                  std::chrono::duration<double>(t1 - t0).count());
    cf_grid_free(pred);
    cf_nodeset_free(nodes);
    cf_model_free(model);
    return rc;
  }

  if (eval->parsed()) {
    char* json = nullptr;
    char* table = nullptr;
    const cf_status status = cf_eval_dirs(ev_pred.c_str(), ev_label.c_str(), ev_pooled ? 1 : 0, &json, &table);
    if (status != CF_OK) return fail_with(status);
    std::fputs(table, stdout);
    if (!ev_json.empty()) {
      std::ofstream out(ev_json);
      out << json;
    } else {
      std::fputs(json, stdout);
      std::fputs("\n", stdout);
    }
    cf_string_free(json);
    cf_string_free(table);
    return 0;
  }

  if (feat->parsed()) {
    if (ft_h == 0) ft_h = ft_w;
    cf_nodeset* nodes = nullptr;
    cf_status status = cf_nodeset_read(ft_input.c_str(), &nodes);
    if (status != CF_OK) return fail_with(status);
    cf_grid* grid = nullptr;
    if (ft_method == "density") {
      status = cf_density_map(nodes, ft_w, ft_h, &grid);
    } else {
      if (ft_nets.empty()) {
        std::fprintf(stderr, "error: --nets is required for rudy\n");
        cf_nodeset_free(nodes);
        return static_cast<int>(CF_ERROR_CONFIG);
      }
      status = cf_rudy_map(nodes, ft_nets.c_str(), ft_w, ft_h, &grid);
    }
    if (status != CF_OK) {
      cf_nodeset_free(nodes);
      return fail_with(status);
    }
    const int rc = write_grid_outputs(grid, ft_out);
    cf_grid_free(grid);
    cf_nodeset_free(nodes);
    return rc;
  }

  if (gc->parsed()) {
    char* report = nullptr;
    const cf_status status = cf_gradcheck(gc_module.c_str(), gc_tol, &report);
    if (report != nullptr) {
      std::fputs(report, stdout);
      cf_string_free(report);
    }
    if (status != CF_OK) return fail_with(status);
    return 0;
  }

  return 0;
}
