#include "bwr/model_io.hpp"

#include <algorithm>
#include <fstream>

namespace bwr {

using nlohmann::json;

namespace {

Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ModelError(where + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ModelError(where + ": entry " + std::to_string(k) + " is not a number");
    v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

}  // namespace

ModelSpec model_from_json(const json& doc) {
  if (!doc.is_object()) throw ModelError("model document must be a JSON object");
  ModelSpec model;
  try {
    model.states.labels = doc.at("states").get<std::vector<std::string>>();
    const auto truth_label = doc.at("truth").get<std::string>();
    const auto& labels = model.states.labels;
    const auto it = std::find(labels.begin(), labels.end(), truth_label);
    if (it == labels.end()) throw ModelError("truth '" + truth_label + "' is not a listed state");
    model.truth = static_cast<std::size_t>(it - labels.begin());

    const auto& agents = doc.at("agents");
    if (!agents.is_array()) throw ModelError("'agents' must be an array");
    const std::size_t n = agents.size();
    const bool has_default_prior = doc.contains("prior");

    for (std::size_t i = 0; i < n; ++i) {
      const auto where = "agents[" + std::to_string(i) + "]";
      const auto& a = agents[i];
      const auto& rows = a.at("likelihood");
      if (!rows.is_array() || rows.empty()) throw ModelError(where + ".likelihood must be a non-empty array");
      const std::size_t cols = rows[0].size();
      Eigen::MatrixXd l(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
      for (std::size_t s = 0; s < rows.size(); ++s) {
        const auto row = vector_from_json(rows[s], where + ".likelihood[" + std::to_string(s) + "]");
        if (static_cast<std::size_t>(row.size()) != cols) {
          throw ModelError(where + ".likelihood rows have unequal lengths");
        }
        l.row(static_cast<Eigen::Index>(s)) = row.transpose();
      }
      model.signals.push_back({std::move(l)});

      if (a.contains("prior")) {
        model.priors.push_back(vector_from_json(a.at("prior"), where + ".prior"));
      } else if (has_default_prior) {
        model.priors.push_back(vector_from_json(doc.at("prior"), "prior"));
      } else {
        throw ModelError(where + " has no prior and no default prior is given");
      }
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (doc.contains("edges")) {
      for (const auto& e : doc.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ModelError("each edge must be a [from, to] pair");
        edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
      }
    }
    model.network = Network::from_edges(n, edges);
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model document: ") + e.what());
  }
  require_valid(model);
  return model;
}

json model_to_json(const ModelSpec& model) {
  json doc;
  doc["states"] = model.states.labels;
  doc["truth"] = model.states.labels.at(model.truth);
  json agents = json::array();
  for (std::size_t i = 0; i < model.agent_count(); ++i) {
    json rows = json::array();
    const auto& l = model.signals[i].likelihood;
    for (Eigen::Index s = 0; s < l.rows(); ++s) rows.push_back(vector_to_json(l.row(s).transpose()));
    agents.push_back({{"likelihood", rows}, {"prior", vector_to_json(model.priors[i])}});
  }
  doc["agents"] = agents;
  json edges = json::array();
  for (const auto& [from, to] : model.network.edges()) edges.push_back({from, to});
  doc["edges"] = edges;
  return doc;
}

ModelSpec load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

void save_model(const ModelSpec& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace bwr
