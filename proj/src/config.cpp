#include "cfield/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cfield {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& section, const std::string& key) {
  fail_config("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
}

template <class T>
T get_as(const json& value, const std::string& section, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const std::exception&) {
    fail_config("config key '" + section + "." + key + "' has the wrong type");
  }
}

void parse_train(const json& doc, TrainConfig& cfg) {
  for (const auto& [key, value] : doc.items()) {
    if (key == "epochs") cfg.epochs = get_as<int>(value, "train", key);
    else if (key == "warmup_epochs") cfg.warmup_epochs = get_as<int>(value, "train", key);
    else if (key == "base_lr") cfg.base_lr = get_as<double>(value, "train", key);
    else if (key == "weight_decay") cfg.weight_decay = get_as<double>(value, "train", key);
    else if (key == "batch_size") cfg.batch_size = get_as<int>(value, "train", key);
    else if (key == "seed") cfg.seed = get_as<uint64_t>(value, "train", key);
    else if (key == "precision") cfg.precision = get_as<std::string>(value, "train", key);
    else if (key == "lds") cfg.lds = get_as<bool>(value, "train", key);
    else if (key == "lds_bin_width") cfg.lds_bin_width = get_as<double>(value, "train", key);
    else if (key == "lds_kernel") cfg.lds_kernel = get_as<int>(value, "train", key);
    else if (key == "lds_sigma") cfg.lds_sigma = get_as<double>(value, "train", key);
    else if (key == "val_fraction") cfg.val_fraction = get_as<double>(value, "train", key);
    else if (key == "clip_norm") cfg.clip_norm = get_as<double>(value, "train", key);
    else bad_key("train", key);
  }
}

void parse_encoder(const json& doc, EncoderConfig& cfg) {
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_stages") cfg.n_stages = get_as<int>(value, "encoder", key);
    else if (key == "grid_scales") cfg.grid_scales = get_as<std::vector<int64_t>>(value, "encoder", key);
    else if (key == "d_model") cfg.d_model = get_as<int64_t>(value, "encoder", key);
    else if (key == "k") cfg.k = get_as<int64_t>(value, "encoder", key);
    else if (key == "base_resolution") {
      auto res = get_as<std::vector<int64_t>>(value, "encoder", key);
      if (res.size() == 1) {
        cfg.base_w = cfg.base_h = res[0];
      } else if (res.size() == 2) {
        cfg.base_w = res[0];
        cfg.base_h = res[1];
      } else {
        fail_config("encoder.base_resolution must be [size] or [w, h]");
      }
    } else if (key == "ffn_hidden") cfg.ffn_hidden = get_as<int64_t>(value, "encoder", key);
    else if (key == "attn_norm") cfg.attn_norm = get_as<std::string>(value, "encoder", key);
    else bad_key("encoder", key);
  }
}

void parse_decoder(const json& doc, DecoderConfig& cfg) {
  for (const auto& [key, value] : doc.items()) {
    if (key == "blocks") cfg.blocks = get_as<std::vector<int>>(value, "decoder", key);
    else if (key == "widths") cfg.widths = get_as<std::vector<int64_t>>(value, "decoder", key);
    else if (key == "head") cfg.head = get_as<std::string>(value, "decoder", key);
    else bad_key("decoder", key);
  }
}

}  // namespace

void AppConfig::validate() const {
  train.validate();
  encoder.validate();
  decoder.validate();
}

AppConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    fail_config(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail_config("config root must be a JSON object");
  AppConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "train") parse_train(value, cfg.train);
    else if (key == "encoder") parse_encoder(value, cfg.encoder);
    else if (key == "decoder") parse_decoder(value, cfg.decoder);
    else bad_key("", key);
  }
  cfg.validate();
  return cfg;
}

AppConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_config("cannot open config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::string config_to_json(const AppConfig& cfg) {
  json doc;
  doc["train"] = {{"epochs", cfg.train.epochs},
                  {"warmup_epochs", cfg.train.warmup_epochs},
                  {"base_lr", cfg.train.base_lr},
                  {"weight_decay", cfg.train.weight_decay},
                  {"batch_size", cfg.train.batch_size},
                  {"seed", cfg.train.seed},
                  {"precision", cfg.train.precision},
                  {"lds", cfg.train.lds},
                  {"lds_bin_width", cfg.train.lds_bin_width},
                  {"lds_kernel", cfg.train.lds_kernel},
                  {"lds_sigma", cfg.train.lds_sigma},
                  {"val_fraction", cfg.train.val_fraction},
                  {"clip_norm", cfg.train.clip_norm}};
  doc["encoder"] = {{"n_stages", cfg.encoder.n_stages},
                    {"grid_scales", cfg.encoder.grid_scales},
                    {"d_model", cfg.encoder.d_model},
                    {"k", cfg.encoder.k},
                    {"base_resolution", {cfg.encoder.base_w, cfg.encoder.base_h}},
                    {"ffn_hidden", cfg.encoder.ffn_hidden},
                    {"attn_norm", cfg.encoder.attn_norm}};
  doc["decoder"] = {{"blocks", cfg.decoder.blocks}, {"widths", cfg.decoder.widths}, {"head", cfg.decoder.head}};
  return doc.dump(2);
}

AppConfig desk_config() {
  AppConfig cfg;
  cfg.encoder.d_model = 32;
  cfg.encoder.k = 4;
  cfg.encoder.base_w = 64;
  cfg.encoder.base_h = 64;
  cfg.decoder.widths = {16, 32, 64, 128};
  return cfg;
}

}  // namespace cfield
