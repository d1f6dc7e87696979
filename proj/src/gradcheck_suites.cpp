#include "cfield/gradcheck_suites.hpp"

#include <random>
#include <sstream>

#include <json.hpp>

#include "cfield/decoder.hpp"
#include "cfield/encoder.hpp"
#include "cfield/lds.hpp"
#include "cfield/model.hpp"
#include "cfield/ops.hpp"
#include "cfield/synthetic.hpp"

namespace cfield {

namespace {

Tensor rand_tensor(std::vector<int64_t> shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int64_t i = 0; i < t.numel(); ++i) t.buf().set(i, dist(rng));
  return t;
}

Tensor weigh(Tape* tape, const Tensor& t, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor c = rand_tensor(t.shape(), rng);
  return ops::sum(tape, ops::mul(tape, t, c));
}

void run_one(SuiteSummary& summary, const std::string& name, const TensorFn& f, std::vector<Tensor> inputs,
             double step, double tol) {
  SuiteResult result;
  result.name = name;
  result.report = grad_check(f, std::move(inputs), step, tol);
  summary.pass = summary.pass && result.report.pass;
  summary.results.push_back(std::move(result));
}

void tensor_suite(SuiteSummary& summary, double tol) {
  std::mt19937_64 rng(2024);
  const int64_t n = 4, a = 3, b = 5, k = 3;
  auto run = [&](const char* name, const TensorFn& f, std::vector<Tensor> in) {
    run_one(summary, std::string("op.") + name, f, std::move(in), 1e-5, tol);
  };

  run("add", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::add(t, in[0], in[1]), 1); },
      {rand_tensor({n, a}, rng), rand_tensor({n, a}, rng)});
  run("sub", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::sub(t, in[0], in[1]), 2); },
      {rand_tensor({n, a}, rng), rand_tensor({n, a}, rng)});
  run("multiply", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::mul(t, in[0], in[1]), 3); },
      {rand_tensor({n, a}, rng), rand_tensor({n, a}, rng)});
  run("scale", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::scale(t, in[0], 2.5), 4); },
      {rand_tensor({n, a}, rng)});
  run("relu", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::relu(t, in[0]), 5); },
      {rand_tensor({n, a}, rng)});
  run("gelu", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::gelu(t, in[0]), 6); },
      {rand_tensor({n, a}, rng)});
  run("sigmoid", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::sigmoid(t, in[0]), 7); },
      {rand_tensor({n, a}, rng)});
  run("matmul", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::matmul(t, in[0], in[1]), 8); },
      {rand_tensor({n, a}, rng), rand_tensor({a, b}, rng)});
  run("linear",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::linear(t, in[0], in[1], in[2]), 9); },
      {rand_tensor({n, a}, rng), rand_tensor({a, b}, rng), rand_tensor({b}, rng)});
  run("mean", [](Tape* t, const std::vector<Tensor>& in) { return ops::mean(t, in[0]); }, {rand_tensor({n, a}, rng)});
  run("sum", [](Tape* t, const std::vector<Tensor>& in) { return ops::sum(t, in[0]); }, {rand_tensor({n, a}, rng)});
  run("reshape", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::reshape(t, in[0], {3, 4}), 10); },
      {rand_tensor({n, a}, rng)});
  run("transpose", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::transpose(t, in[0]), 11); },
      {rand_tensor({n, a}, rng)});

  const std::vector<int64_t> seg = {0, 1, 1, 2, 2, 2, 0, 1};
  run("scatter_sum",
      [seg](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::scatter_sum(t, in[0], seg, 3), 12); },
      {rand_tensor({8, a}, rng)});
  const std::vector<int64_t> gather_ids = {2, 0, 1, 1, 3};
  run("row_gather",
      [gather_ids](Tape* t, const std::vector<Tensor>& in) {
        return weigh(t, ops::row_gather(t, in[0], gather_ids), 13);
      },
      {rand_tensor({n, a}, rng)});
  const std::vector<int64_t> seg2 = {0, 0, 1, 1, 1, 2, 2, 3, 3, 3};
  run("segmented_softmax",
      [seg2](Tape* t, const std::vector<Tensor>& in) {
        return weigh(t, ops::segmented_softmax(t, in[0], seg2), 14);
      },
      {rand_tensor({10}, rng)});
  run("slot_outer",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::slot_outer(t, in[0], in[1]), 15); },
      {rand_tensor({n, k}, rng), rand_tensor({n, a}, rng)});
  run("slot_dot",
      [k](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::slot_dot(t, in[0], in[1], k), 16); },
      {rand_tensor({n, a}, rng), rand_tensor({n * k, a}, rng)});
  run("slot_reduce",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::slot_reduce(t, in[0], in[1]), 17); },
      {rand_tensor({n, k}, rng), rand_tensor({n * k, a}, rng)});
  run("depthwise_conv2d",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::depthwise_conv2d(t, in[0], in[1]), 18); },
      {rand_tensor({2, 5, 6}, rng), rand_tensor({2, 3, 3}, rng)});
  run("conv2d",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::conv2d(t, in[0], in[1], in[2], 1, 1), 19); },
      {rand_tensor({2, 5, 5}, rng), rand_tensor({3, 2, 3, 3}, rng), rand_tensor({3}, rng)});
  run("conv2d_stride2",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::conv2d(t, in[0], in[1], in[2], 2, 1), 20); },
      {rand_tensor({2, 6, 6}, rng), rand_tensor({3, 2, 3, 3}, rng), rand_tensor({3}, rng)});
  run("channel_affine",
      [](Tape* t, const std::vector<Tensor>& in) {
        return weigh(t, ops::channel_affine(t, in[0], in[1], in[2]), 21);
      },
      {rand_tensor({3, 4, 4}, rng), rand_tensor({3}, rng), rand_tensor({3}, rng)});
  run("upsample2x", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::upsample2x(t, in[0]), 22); },
      {rand_tensor({2, 3, 4}, rng)});
  run("concat_channels",
      [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::concat_channels(t, {in[0], in[1]}), 23); },
      {rand_tensor({2, 3, 3}, rng), rand_tensor({3, 3, 3}, rng)});
  run("pad2d", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::pad2d(t, in[0], 1, 2), 24); },
      {rand_tensor({2, 3, 3}, rng)});
  run("crop2d", [](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::crop2d(t, in[0], 2, 2), 25); },
      {rand_tensor({2, 4, 4}, rng)});
  const std::vector<int64_t> cells = {1, 4, 6};
  run("densify_cells",
      [cells](Tape* t, const std::vector<Tensor>& in) {
        return weigh(t, ops::densify_cells(t, in[0], cells, 3, 3), 26);
      },
      {rand_tensor({3, a}, rng)});
  const std::vector<int64_t> pcells = {0, 4, 4, 8};
  run("gather_cells",
      [pcells](Tape* t, const std::vector<Tensor>& in) { return weigh(t, ops::gather_cells(t, in[0], pcells), 27); },
      {rand_tensor({a, 3, 3}, rng)});
  std::vector<double> target(static_cast<size_t>(n * a)), wts(static_cast<size_t>(n * a));
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (auto& v : target) v = ud(rng);
  for (auto& v : wts) v = 0.5 + ud(rng);
  run("weighted_mse",
      [target, wts](Tape* t, const std::vector<Tensor>& in) { return ops::weighted_mse(t, in[0], target, wts); },
      {rand_tensor({n, a}, rng)});
}

// Tiny fixtures shared by the encoder/decoder/composed suites.
struct TinyFixture {
  EncoderConfig enc_cfg;
  DecoderConfig dec_cfg;
  NodeSet nodes;
};

TinyFixture tiny_fixture() {
  TinyFixture fx;
  fx.enc_cfg.n_stages = 1;
  fx.enc_cfg.grid_scales = {2};
  fx.enc_cfg.d_model = 4;
  fx.enc_cfg.k = 2;
  fx.enc_cfg.base_w = 8;
  fx.enc_cfg.base_h = 8;
  fx.dec_cfg.blocks = {1, 1};
  fx.dec_cfg.widths = {4, 8};
  fx.nodes = gen_synthetic(7, 6, 2, 8, 8).nodes;
  return fx;
}

std::vector<Tensor> registry_tensors(std::vector<NamedParam>& params) {
  std::vector<Tensor> tensors;
  for (NamedParam& p : params) tensors.push_back(p.tensor);
  return tensors;
}

void encoder_suite(SuiteSummary& summary, double tol) {
  TinyFixture fx = tiny_fixture();
  std::mt19937_64 rng(11);
  EncoderParams params = init_encoder(fx.enc_cfg, rng, Dtype::F64);
  std::vector<NamedParam> named;
  collect_encoder_params(params, named);
  // the params structs alias the gradcheck inputs, so perturbations land in
  // the forward pass without rebuilding anything
  auto f = [&fx, &params](Tape* tape, const std::vector<Tensor>&) {
    return weigh(tape, encoder_forward(tape, fx.nodes, fx.enc_cfg, params), 77);
  };
  run_one(summary, "encoder.1stage", f, registry_tensors(named), 1e-5, tol);
}

void decoder_suite(SuiteSummary& summary, double tol) {
  TinyFixture fx = tiny_fixture();
  std::mt19937_64 rng(13);
  DecoderParams params = init_decoder(fx.dec_cfg, 4, rng, Dtype::F64);
  std::vector<NamedParam> named;
  collect_decoder_params(params, named);
  Tensor y = rand_tensor({4, 8, 8}, rng);
  std::vector<Tensor> inputs = registry_tensors(named);
  inputs.push_back(y);
  auto f = [&fx, &params, y](Tape* tape, const std::vector<Tensor>&) {
    return weigh(tape, decoder_forward(tape, y, fx.dec_cfg, params), 78);
  };
  run_one(summary, "decoder.tiny", f, std::move(inputs), 1e-5, tol);
}

void loss_suite(SuiteSummary& summary, double tol) {
  std::mt19937_64 rng(17);
  LabelGrid label = LabelGrid::zeros(5, 5);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (double& v : label.values) v = ud(rng);
  LdsConfig cfg;
  LdsWeightTable table = LdsWeightTable::build({&label}, cfg);
  const std::vector<double> weights = table.weights_for(label);
  Tensor pred = rand_tensor({5, 5}, rng, 0.0, 1.0);
  auto f = [&label, &weights](Tape* tape, const std::vector<Tensor>& in) {
    return ops::weighted_mse(tape, in[0], label.values, weights);
  };
  run_one(summary, "loss.weighted_mse", f, {pred}, 1e-6, std::min(tol, 1e-6));
}

void composed_suite(SuiteSummary& summary, double tol) {
  TinyFixture fx = tiny_fixture();
  Model model = Model::create(fx.enc_cfg, fx.dec_cfg, 23, Dtype::F64);
  // move every parameter into general position: fresh init has zero biases,
  // which parks the ReLUs over empty encoder cells exactly on their kink
  // where central differences are invalid
  std::mt19937_64 nudge(29);
  std::uniform_real_distribution<double> ud(-0.05, 0.05);
  for (NamedParam& p : model.params())
    for (int64_t i = 0; i < p.tensor.numel(); ++i) p.tensor.buf().set(i, p.tensor.at(i) + ud(nudge));
  LabelGrid label = gen_synthetic(7, 6, 2, 8, 8).label;
  LdsConfig lds_cfg;
  model.lds() = LdsWeightTable::build({&label}, lds_cfg);
  const std::vector<double> weights = model.lds().weights_for(label);
  auto f = [&model, &fx, &label, &weights](Tape* tape, const std::vector<Tensor>&) {
    Tensor pred = model.forward(tape, fx.nodes);
    return ops::weighted_mse(tape, pred, label.values, weights);
  };
  run_one(summary, "composed.encoder+decoder+loss", f, registry_tensors(model.params()), 1e-5, tol);
}

}  // namespace

SuiteSummary run_gradcheck_suite(const std::string& module, double tol) {
  SuiteSummary summary;
  bool known = false;
  if (module == "all" || module == "tensor") {
    tensor_suite(summary, tol);
    known = true;
  }
  if (module == "all" || module == "encoder") {
    encoder_suite(summary, tol);
    known = true;
  }
  if (module == "all" || module == "decoder") {
    decoder_suite(summary, tol);
    known = true;
  }
  if (module == "all" || module == "loss") {
    loss_suite(summary, tol);
    known = true;
  }
  if (module == "all") composed_suite(summary, tol);
  if (!known) fail_config("gradcheck: unknown module '" + module + "' (use all|tensor|encoder|decoder|loss)");
  return summary;
}

std::string SuiteSummary::to_string() const {
  std::ostringstream os;
  for (const SuiteResult& r : results)
    os << (r.report.pass ? "[pass] " : "[FAIL] ") << r.name << " max_rel_err=" << r.report.max_rel_err << "\n";
  os << (pass ? "gradcheck: all checks passed" : "gradcheck: FAILURES above") << "\n";
  return os.str();
}

std::string SuiteSummary::to_json() const {
  nlohmann::json doc;
  doc["pass"] = pass;
  doc["checks"] = nlohmann::json::array();
  for (const SuiteResult& r : results)
    doc["checks"].push_back({{"name", r.name}, {"pass", r.report.pass}, {"max_rel_err", r.report.max_rel_err}});
  return doc.dump(2);
}

}  // namespace cfield
