#include "attrsparse/model_io.hpp"

#include <json.hpp>

#include "attrsparse/io.hpp"

namespace attrsparse {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;

json encode(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(format_double(x));
  return a;
}

Vector decode(const json& a) {
  Vector v;
  for (const auto& s : a) {
    const auto x = parse_double(s.get<std::string>());
    if (!x) throw DataError("model: bad parameter '" + s.get<std::string>() + "'");
    v.push_back(*x);
  }
  return v;
}

json linear_json(const LinearModel& m) {
  json j{{"dim", m.dim()},
         {"activation", m.activation == Activation::sigmoid ? "sigmoid" : "identity"},
         {"w", encode(m.w)}};
  j["bias"] = m.bias ? json(format_double(*m.bias)) : json(nullptr);
  return j;
}

LinearModel linear_from(const json& j) {
  LinearModel m;
  m.w = decode(j.at("w"));
  const auto act = j.value("activation", std::string("sigmoid"));
  if (act == "sigmoid") m.activation = Activation::sigmoid;
  else if (act == "identity") m.activation = Activation::identity;
  else throw DataError("model: unknown activation '" + act + "'");
  if (j.contains("bias") && !j["bias"].is_null()) {
    const auto b = parse_double(j["bias"].get<std::string>());
    if (!b) throw DataError("model: bad bias");
    m.bias = *b;
  }
  if (j.contains("dim")) require_same_dim(j["dim"].get<std::size_t>(), m.dim(), "model dim");
  m.validate();
  return m;
}

}  // namespace

std::string model_to_json(const AnyModel& model) {
  json j{{"format", "attrsparse-model"}, {"version", kModelVersion}};
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    j["kind"] = "linear";
    j.update(linear_json(*lin));
  } else if (const auto* mlp = std::get_if<MlpModel>(&model)) {
    j["kind"] = "mlp";
    j["sizes"] = mlp->sizes();
    j["hidden_activation"] = to_string(mlp->hidden);
    json layers = json::array();
    for (const auto& l : mlp->layers)
      layers.push_back({{"weight", encode(l.weight.data())}, {"bias", encode(l.bias)}});
    j["layers"] = std::move(layers);
  } else {
    const auto& ova = std::get<OneVsAllModel>(model);
    j["kind"] = "one-vs-all";
    json heads = json::array();
    for (const auto& h : ova.heads) heads.push_back(linear_json(h));
    j["heads"] = std::move(heads);
  }
  return j.dump(2) + "\n";
}

AnyModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "attrsparse-model")
      throw DataError("model: not an attrsparse model file");
    if (j.at("version").get<int>() > kModelVersion) throw DataError("model: unsupported version");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "linear") return linear_from(j);
    if (kind == "mlp") {
      const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
      MlpModel m;
      m.hidden = parse_hidden_activation(j.at("hidden_activation").get<std::string>());
      const auto& layers = j.at("layers");
      if (layers.size() + 1 != sizes.size()) throw DataError("model: layer count mismatch");
      for (std::size_t l = 0; l < layers.size(); ++l) {
        DenseLayer layer{Matrix(sizes[l + 1], sizes[l]), decode(layers[l].at("bias"))};
        const Vector w = decode(layers[l].at("weight"));
        require_same_dim(w.size(), sizes[l] * sizes[l + 1], "model layer weight");
        std::copy(w.begin(), w.end(), layer.weight.data().begin());
        m.layers.push_back(std::move(layer));
      }
      m.validate();
      return m;
    }
    if (kind == "one-vs-all") {
      OneVsAllModel m;
      for (const auto& h : j.at("heads")) m.heads.push_back(linear_from(h));
      m.validate();
      return m;
    }
    throw DataError("model: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model));
}

AnyModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

}  // namespace attrsparse
