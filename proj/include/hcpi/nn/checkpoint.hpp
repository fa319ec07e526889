#pragma once

// Layered checkpoint container.
//
// Layout:
//   line 1   "HCPI-CKPT <format_version>"
//   line 2   one-line JSON header: {"meta": {...}, "tensors": [{"name", "rows", "cols", "offset"}...]}
//   rest     row-major IEEE-754 binary64 payload, little-endian, tensors
//            back to back at the listed element offsets
//
// Payload bytes are copied verbatim, so save/load is bit-exact.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hcpi/core/error.hpp"
#include "hcpi/nn/adam.hpp"
#include "hcpi/nn/dense_net.hpp"

namespace hcpi::nn {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kCheckpointMagic = "HCPI-CKPT";

class TensorArchive {
 public:
  nlohmann::json& meta() { return meta_; }
  const nlohmann::json& meta() const { return meta_; }

  void put(const std::string& name, const Matrix& m) {
    Entry e{m.rows(), m.cols(), std::vector<double>(static_cast<std::size_t>(m.size()))};
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) e.data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    tensors_[name] = std::move(e);
  }
  void put(const std::string& name, const Vector& v) { put(name, Matrix(v)); }

  bool has(const std::string& name) const { return tensors_.count(name) > 0; }

  Matrix get_matrix(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("checkpoint: missing tensor '" + name + "'");
    const Entry& e = it->second;
    Matrix m(e.rows, e.cols);
    for (Eigen::Index i = 0; i < e.rows; ++i)
      for (Eigen::Index j = 0; j < e.cols; ++j) m(i, j) = e.data[static_cast<std::size_t>(i * e.cols + j)];
    return m;
  }
  Vector get_vector(const std::string& name) const {
    Matrix m = get_matrix(name);
    if (m.cols() != 1) throw ConfigError("checkpoint: tensor '" + name + "' is not a column vector");
    return m.col(0);
  }

  void write(const std::string& path) const {
    static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes little-endian host");
    nlohmann::json header;
    header["meta"] = meta_;
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, e] : tensors_) {
      header["tensors"].push_back({{"name", name}, {"rows", e.rows}, {"cols", e.cols}, {"offset", offset}});
      offset += e.data.size();
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("checkpoint: cannot open '" + path + "' for writing");
    out << kCheckpointMagic << ' ' << kCheckpointFormatVersion << '\n' << header.dump() << '\n';
    for (const auto& [name, e] : tensors_)
      out.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    if (!out) throw ConfigError("checkpoint: write failed for '" + path + "'");
  }

  static TensorArchive read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kCheckpointMagic) throw ConfigError("checkpoint: '" + path + "' is not a checkpoint file");
    if (version != kCheckpointFormatVersion)
      throw ConfigError("checkpoint: format version " + std::to_string(version) + " unsupported (expected " +
                        std::to_string(kCheckpointFormatVersion) + ")");
    in.ignore(1);
    std::string line;
    std::getline(in, line);
    nlohmann::json header = nlohmann::json::parse(line);
    TensorArchive ar;
    ar.meta_ = header.at("meta");
    std::vector<std::pair<std::string, Entry>> order;
    for (const auto& t : header.at("tensors")) {
      Entry e{t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>(), {}};
      e.data.resize(static_cast<std::size_t>(e.rows * e.cols));
      order.emplace_back(t.at("name").get<std::string>(), std::move(e));
    }
    for (auto& [name, e] : order) {
      in.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(double)));
      if (!in) throw ConfigError("checkpoint: truncated payload in '" + path + "'");
      ar.tensors_[name] = std::move(e);
    }
    return ar;
  }

 private:
  struct Entry {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<double> data;
  };
  nlohmann::json meta_ = nlohmann::json::object();
  std::map<std::string, Entry> tensors_;
};

inline void save_net(TensorArchive& ar, const std::string& prefix, const DenseNet& net) {
  ar.meta()[prefix + ".layer_dims"] = net.layer_dims();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    ar.put(prefix + ".W" + std::to_string(l), net.weight(l));
    ar.put(prefix + ".b" + std::to_string(l), net.bias(l));
  }
}

inline DenseNet load_net(const TensorArchive& ar, const std::string& prefix) {
  if (!ar.meta().contains(prefix + ".layer_dims")) throw ConfigError("checkpoint: missing network '" + prefix + "'");
  DenseNet net(ar.meta().at(prefix + ".layer_dims").get<std::vector<int>>());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Matrix w = ar.get_matrix(prefix + ".W" + std::to_string(l));
    Vector b = ar.get_vector(prefix + ".b" + std::to_string(l));
    if (w.rows() != net.weight(l).rows() || w.cols() != net.weight(l).cols() || b.size() != net.bias(l).size())
      throw ConfigError("checkpoint: layer " + std::to_string(l) + " of '" + prefix + "' has wrong shape");
    net.weight(l) = std::move(w);
    net.bias(l) = std::move(b);
  }
  return net;
}

inline void save_optimizer(TensorArchive& ar, const std::string& prefix, const OptimizerState& opt) {
  ar.meta()[prefix + ".step"] = opt.step;
  ar.meta()[prefix + ".lr"] = opt.config.learning_rate;
  for (std::size_t l = 0; l < opt.first_moment.weights.size(); ++l) {
    const auto s = std::to_string(l);
    ar.put(prefix + ".mW" + s, opt.first_moment.weights[l]);
    ar.put(prefix + ".mb" + s, opt.first_moment.biases[l]);
    ar.put(prefix + ".vW" + s, opt.second_moment.weights[l]);
    ar.put(prefix + ".vb" + s, opt.second_moment.biases[l]);
  }
}

inline void load_optimizer(const TensorArchive& ar, const std::string& prefix, OptimizerState& opt) {
  opt.step = ar.meta().at(prefix + ".step").get<std::int64_t>();
  for (std::size_t l = 0; l < opt.first_moment.weights.size(); ++l) {
    const auto s = std::to_string(l);
    opt.first_moment.weights[l] = ar.get_matrix(prefix + ".mW" + s);
    opt.first_moment.biases[l] = ar.get_vector(prefix + ".mb" + s);
    opt.second_moment.weights[l] = ar.get_matrix(prefix + ".vW" + s);
    opt.second_moment.biases[l] = ar.get_vector(prefix + ".vb" + s);
  }
}

inline void save_optimizer(TensorArchive& ar, const std::string& prefix, const VectorOptimizerState& opt) {
  ar.meta()[prefix + ".step"] = opt.step;
  ar.meta()[prefix + ".lr"] = opt.config.learning_rate;
  ar.put(prefix + ".m", opt.first_moment);
  ar.put(prefix + ".v", opt.second_moment);
}

inline void load_optimizer(const TensorArchive& ar, const std::string& prefix, VectorOptimizerState& opt) {
  opt.step = ar.meta().at(prefix + ".step").get<std::int64_t>();
  opt.first_moment = ar.get_vector(prefix + ".m");
  opt.second_moment = ar.get_vector(prefix + ".v");
}

}  // namespace hcpi::nn
