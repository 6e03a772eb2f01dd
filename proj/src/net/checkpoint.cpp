#include <fstream>

#include "gcp/net.hpp"

namespace gcp::net {
namespace {

constexpr int kFormatVersion = 1;

std::vector<double> to_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return {v.data(), v.data() + v.size()};
}

void load_heads(const nlohmann::json& j, HeadNetwork& net) {
  const auto& heads = j.at("heads");
  const auto names = net.head_names();
  if (heads.size() != net.heads().size()) throw ParseError("checkpoint: head count mismatch");
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const auto& h = heads.at(k);
    if (h.at("name").get<std::string>() != names[k]) {
      throw ParseError("checkpoint: expected head '" + names[k] + "'");
    }
    MlpHead& head = net.heads()[k];
    const auto w1 = h.at("w1").get<std::vector<double>>();
    const auto b1 = h.at("b1").get<std::vector<double>>();
    const auto w2 = h.at("w2").get<std::vector<double>>();
    if (w1.size() != static_cast<std::size_t>(head.hidden() * head.in_dim()) ||
        b1.size() != static_cast<std::size_t>(head.hidden()) ||
        w2.size() != static_cast<std::size_t>(head.hidden())) {
      throw ParseError("checkpoint: weight array shape mismatch in head '" + names[k] + "'");
    }
    head.w1() = Eigen::Map<const Eigen::MatrixXd>(w1.data(), head.hidden(), head.in_dim());
    head.b1() = Eigen::Map<const Eigen::VectorXd>(b1.data(), head.hidden());
    head.w2() = Eigen::Map<const Eigen::VectorXd>(w2.data(), head.hidden());
    head.b2() = h.at("b2").get<double>();
  }
}

void check_header(const nlohmann::json& j, const std::string& kind) {
  if (j.value("format", "") != "gcp-network" || j.value("version", 0) != kFormatVersion) {
    throw ParseError("checkpoint: not a version " + std::to_string(kFormatVersion) +
                     " network document");
  }
  if (j.at("kind").get<std::string>() != kind) {
    throw ParseError("checkpoint: expected a '" + kind + "' network");
  }
}

}  // namespace

nlohmann::json network_to_json(const HeadNetwork& net) {
  nlohmann::json j;
  j["format"] = "gcp-network";
  j["version"] = kFormatVersion;
  j["kind"] = net.kind();
  j["in_dim"] = net.in_dim();
  j["hidden"] = net.hidden();
  j["dropout"] = net.dropout();
  if (const auto* g = dynamic_cast<const GcpNetwork*>(&net)) j["loss"] = to_string(g->loss());
  j["w1_layout"] = "column_major";
  const auto names = net.head_names();
  nlohmann::json heads = nlohmann::json::array();
  for (std::size_t k = 0; k < net.heads().size(); ++k) {
    const MlpHead& h = net.heads()[k];
    heads.push_back({{"name", names[k]},
                     {"step_count", h.step_count()},
                     {"w1", std::vector<double>(h.w1().data(), h.w1().data() + h.w1().size())},
                     {"b1", to_vector(h.b1())},
                     {"w2", to_vector(h.w2())},
                     {"b2", h.b2()}});
  }
  j["heads"] = std::move(heads);
  return j;
}

GcpNetwork gcp_network_from_json(const nlohmann::json& j) {
  check_header(j, "gcp");
  GcpNetwork net(j.at("in_dim").get<int>(), j.at("hidden").get<int>(),
                 j.at("dropout").get<double>(),
                 loss_kind_from_string(j.value("loss", std::string("student_nll"))));
  load_heads(j, net);
  return net;
}

GaussianNetwork gaussian_network_from_json(const nlohmann::json& j) {
  check_header(j, "gaussian");
  GaussianNetwork net(j.at("in_dim").get<int>(), j.at("hidden").get<int>(),
                      j.at("dropout").get<double>());
  load_heads(j, net);
  return net;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw ParseError(path.string() + ": write failed");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace gcp::net
