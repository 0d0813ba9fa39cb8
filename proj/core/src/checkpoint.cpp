#include "mvcorr/checkpoint.hpp"

#include <string>
#include <utility>
#include <vector>

#include "mvcorr/errors.hpp"

namespace mvcorr {

namespace {

using Block = ParameterLayout::Block;
using json = nlohmann::json;

std::vector<std::pair<const char*, Block>> named_blocks(const ParameterLayout& lay) {
  return {{"gate_weights", lay.gate_weights},     {"gate_bias", lay.gate_bias},
          {"mean_weights", lay.mean_weights},     {"scale_weights", lay.scale_weights},
          {"factor_weights", lay.factor_weights}, {"mix_weights", lay.mix_weights},
          {"mix_bias", lay.mix_bias},             {"lengthscale_raw", lay.lengthscales}};
}

}  // namespace

json checkpoint_json(const ForecastState& state, const Scaler* scaler) {
  const ModelDims& d = state.dims();
  json j;
  j["format"] = kCheckpointFormat;
  j["dims"] = {{"hidden", d.hidden}, {"rank", d.rank},       {"kernels", d.kernels},
               {"window", d.window}, {"context", d.context}, {"inputs", d.inputs}};
  j["lengthscales"] = state.lengthscales();
  j["learn_lengthscales"] = state.learn_lengthscales;
  j["identity_correlation"] = state.identity_correlation;
  j["encoder"] = {{"season_length", state.encoder().season_length()},
                  {"num_series", state.encoder().num_series()}};
  j["seed"] = state.seed();
  json tensors = json::object();
  for (const auto& [name, b] : named_blocks(state.layout())) {
    const auto v = state.params().segment(b.offset, b.size());
    tensors[name] = {{"shape", {b.rows, b.cols}}, {"data", std::vector<double>(v.begin(), v.end())}};
  }
  j["tensors"] = std::move(tensors);
  if (scaler != nullptr) {
    j["scaler"] = *scaler;
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw ConfigError("unsupported checkpoint format `" + j.at("format").get<std::string>() + "`");
    }
    const json& jd = j.at("dims");
    ModelDims d;
    d.hidden = jd.at("hidden").get<int>();
    d.rank = jd.at("rank").get<int>();
    d.kernels = jd.at("kernels").get<int>();
    d.window = jd.at("window").get<int>();
    d.context = jd.at("context").get<int>();
    d.inputs = jd.at("inputs").get<int>();
    InputEncoder enc(j.at("encoder").at("season_length").get<int>(), j.at("encoder").at("num_series").get<int>());
    ForecastState state(d, j.at("lengthscales").get<std::vector<double>>(), enc, j.at("seed").get<std::uint64_t>());
    state.learn_lengthscales = j.at("learn_lengthscales").get<bool>();
    state.identity_correlation = j.at("identity_correlation").get<bool>();

    const json& tensors = j.at("tensors");
    for (const auto& [name, b] : named_blocks(state.layout())) {
      const json& t = tensors.at(name);
      const auto shape = t.at("shape").get<std::vector<Index>>();
      const auto data = t.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != b.rows || shape[1] != b.cols ||
          static_cast<Index>(data.size()) != b.size()) {
        throw ConfigError(std::string("checkpoint tensor `") + name + "` has the wrong shape");
      }
      state.params().segment(b.offset, b.size()) = Eigen::Map<const Vec>(data.data(), b.size());
    }
    Checkpoint out{std::move(state), std::nullopt};
    if (j.contains("scaler")) {
      out.scaler = j.at("scaler").get<Scaler>();
    }
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ForecastState& state, const Scaler* scaler) {
  write_json_file(path, checkpoint_json(state, scaler));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_json_file(path)); }

}  // namespace mvcorr
