#include "cfield/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cfield/config.hpp"

namespace cfield {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

// Fixed little-endian layout; the in-memory copy path assumes an LE host.
void put_u32(std::string& out, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
               static_cast<char>(v >> 24)};
  out.append(b, 4);
}

void put_u64(std::string& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out += s;
}

struct Reader {
  const std::string& data;
  size_t pos = 0;
  explicit Reader(const std::string& d) : data(d) {}
  void need(size_t n) const {
    if (pos + n > data.size()) fail_data("checkpoint: truncated section");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(data[pos + static_cast<size_t>(i)]);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    const uint64_t lo = u32();
    const uint64_t hi = u32();
    return lo | (hi << 32);
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
  const char* raw(size_t n) {
    need(n);
    const char* p = data.data() + pos;
    pos += n;
    return p;
  }
};

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_str(out, name);
  out.push_back(static_cast<char>(t.dtype()));
  put_u32(out, static_cast<uint32_t>(t.rank()));
  for (int64_t e : t.shape()) put_u64(out, static_cast<uint64_t>(e));
  const size_t bytes = static_cast<size_t>(t.numel()) * dtype_size(t.dtype());
  const size_t off = out.size();
  out.resize(off + bytes);
  if (t.dtype() == Dtype::F64)
    std::memcpy(out.data() + off, t.data<double>(), bytes);
  else
    std::memcpy(out.data() + off, t.data<float>(), bytes);
}

std::pair<std::string, Tensor> get_tensor(Reader& r) {
  const std::string name = r.str();
  r.need(1);
  const Dtype dt = static_cast<Dtype>(r.data[r.pos]);
  ++r.pos;
  if (dt != Dtype::F32 && dt != Dtype::F64) fail_data("checkpoint: bad dtype for tensor '" + name + "'");
  const uint32_t rank = r.u32();
  if (rank > 8) fail_data("checkpoint: implausible tensor rank");
  std::vector<int64_t> shape;
  for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int64_t>(r.u64()));
  Tensor t = Tensor::zeros(shape, dt);
  const size_t bytes = static_cast<size_t>(t.numel()) * dtype_size(dt);
  const char* p = r.raw(bytes);
  if (dt == Dtype::F64)
    std::memcpy(t.data<double>(), p, bytes);
  else
    std::memcpy(t.data<float>(), p, bytes);
  return {name, t};
}

}  // namespace

void write_checkpoint_file(const std::string& path, const CheckpointData& data) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);

  auto section = [&out](const std::string& name, const std::string& payload) {
    put_str(out, name);
    put_u64(out, payload.size());
    out += payload;
  };

  section("meta", data.meta_json);
  section("config", data.config_json);

  std::string params;
  put_u64(params, data.params.size());
  for (const auto& [name, tensor] : data.params) put_tensor(params, name, tensor);
  section("params", params);

  std::string adamw;
  put_u64(adamw, static_cast<uint64_t>(data.adam_step));
  put_u64(adamw, data.adam_m.size());
  for (size_t i = 0; i < data.adam_m.size(); ++i) {
    put_tensor(adamw, "m", data.adam_m[i]);
    put_tensor(adamw, "v", data.adam_v[i]);
  }
  section("adamw", adamw);

  std::string lds;
  lds.push_back(data.lds_enabled ? 1 : 0);
  put_f64(lds, data.lds_bin_width);
  put_u64(lds, data.lds_weights.size());
  for (double w : data.lds_weights) put_f64(lds, w);
  section("lds", lds);

  section("rng", data.rng_state);

  std::ofstream file(path, std::ios::binary);
  if (!file) fail_data("cannot write checkpoint " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) fail_data("write failed for checkpoint " + path);
}

CheckpointData read_checkpoint_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail_data("cannot open checkpoint " + path);
  std::ostringstream os;
  os << file.rdbuf();
  const std::string blob = os.str();
  if (blob.size() < 8 || std::memcmp(blob.data(), kMagic, 4) != 0)
    fail_data(path + ": not a CFCK checkpoint");
  Reader top(blob);
  top.pos = 4;
  const uint32_t version = top.u32();
  if (version != kVersion) fail_compat(path + ": unsupported checkpoint version " + std::to_string(version));

  CheckpointData data;
  while (top.pos < blob.size()) {
    const std::string name = top.str();
    const uint64_t len = top.u64();
    top.need(len);
    const std::string payload = blob.substr(top.pos, len);
    top.pos += len;
    Reader r(payload);
    if (name == "meta") {
      data.meta_json = payload;
    } else if (name == "config") {
      data.config_json = payload;
    } else if (name == "params") {
      const uint64_t count = r.u64();
      for (uint64_t i = 0; i < count; ++i) data.params.push_back(get_tensor(r));
    } else if (name == "adamw") {
      data.adam_step = static_cast<int64_t>(r.u64());
      const uint64_t count = r.u64();
      for (uint64_t i = 0; i < count; ++i) {
        data.adam_m.push_back(get_tensor(r).second);
        data.adam_v.push_back(get_tensor(r).second);
      }
    } else if (name == "lds") {
      r.need(1);
      data.lds_enabled = payload[r.pos] != 0;
      ++r.pos;
      data.lds_bin_width = r.f64();
      const uint64_t bins = r.u64();
      for (uint64_t i = 0; i < bins; ++i) data.lds_weights.push_back(r.f64());
    } else if (name == "rng") {
      data.rng_state = payload;
    } else {
      log_warn(path + ": ignoring unknown checkpoint section '" + name + "'");
    }
  }
  return data;
}

void save_checkpoint(const std::string& path, const TrainState& state, const std::string& config_json) {
  CheckpointData data;
  nlohmann::json meta;
  meta["format"] = "cfck";
  meta["next_epoch"] = state.next_epoch;
  meta["global_step"] = state.optimizer.step();
  meta["best_val"] = state.best_val;
  meta["best_epoch"] = state.best_epoch;
  meta["dtype"] = dtype_name(state.model.dtype());
  nlohmann::json hist = nlohmann::json::array();
  for (const EpochStats& s : state.history) {
    nlohmann::json row;
    row["epoch"] = s.epoch;
    row["loss"] = s.train_loss;
    row["lr"] = s.lr;
    if (std::isfinite(s.val_pearson)) row["val_pearson"] = s.val_pearson;
    hist.push_back(row);
  }
  meta["history"] = hist;
  data.meta_json = meta.dump();
  data.config_json = config_json;
  for (const NamedParam& p : state.model.params()) data.params.push_back({p.name, p.tensor});
  data.adam_step = state.optimizer.step();
  data.adam_m = state.optimizer.moments_m();
  data.adam_v = state.optimizer.moments_v();
  data.lds_enabled = state.model.lds().enabled();
  data.lds_bin_width = state.model.lds().bin_width();
  data.lds_weights = state.model.lds().weights();
  data.rng_state = state.rng_state;
  write_checkpoint_file(path, data);
}

TrainState load_checkpoint(const std::string& path, std::string* config_json_out) {
  CheckpointData data = read_checkpoint_file(path);
  if (data.config_json.empty()) fail_data(path + ": checkpoint has no config section");
  const AppConfig config = parse_config(data.config_json);
  if (config_json_out != nullptr) *config_json_out = data.config_json;

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(data.meta_json);
  } catch (const std::exception& e) {
    fail_data(path + ": bad meta section: " + std::string(e.what()));
  }
  const Dtype dt = meta.value("dtype", std::string("f64")) == "f32" ? Dtype::F32 : Dtype::F64;

  TrainState state;
  state.model = Model::create(config.encoder, config.decoder, /*seed=*/0, dt);
  auto& registry = state.model.params();
  if (registry.size() != data.params.size())
    fail_compat(path + ": checkpoint has " + std::to_string(data.params.size()) + " tensors, model expects " +
                std::to_string(registry.size()));
  for (size_t i = 0; i < registry.size(); ++i) {
    const auto& [name, tensor] = data.params[i];
    if (name != registry[i].name)
      fail_compat(path + ": parameter order mismatch at '" + name + "' (expected '" + registry[i].name + "')");
    if (tensor.shape() != registry[i].tensor.shape() || tensor.dtype() != registry[i].tensor.dtype())
      fail_compat(path + ": parameter '" + name + "' has shape " + tensor.shape_str());
    registry[i].tensor.buf() = tensor.buf();
  }

  state.model.lds() = LdsWeightTable::from_weights(data.lds_weights.empty()
                                                       ? LdsWeightTable::uniform().weights()
                                                       : data.lds_weights,
                                                   data.lds_bin_width, data.lds_enabled);

  state.optimizer.init(registry);
  if (!data.adam_m.empty()) {
    if (data.adam_m.size() != registry.size()) fail_compat(path + ": optimizer state size mismatch");
    for (size_t i = 0; i < registry.size(); ++i) {
      state.optimizer.moments_m()[i].buf() = data.adam_m[i].buf();
      state.optimizer.moments_v()[i].buf() = data.adam_v[i].buf();
    }
  }
  state.optimizer.set_step(data.adam_step);

  state.next_epoch = meta.value("next_epoch", int64_t{0});
  state.best_val = meta.value("best_val", 0.0);
  state.best_epoch = meta.value("best_epoch", int64_t{-1});
  state.rng_state = data.rng_state;
  if (meta.contains("history"))
    for (const auto& row : meta["history"]) {
      EpochStats s;
      s.epoch = row.value("epoch", int64_t{0});
      s.train_loss = row.value("loss", 0.0);
      s.lr = row.value("lr", 0.0);
      s.val_pearson = row.value("val_pearson", std::numeric_limits<double>::quiet_NaN());
      state.history.push_back(s);
    }
  return state;
}

}  // namespace cfield
