#pragma once

// Model checkpoint:
//
//   "MSFCKPT 1\n"
//   "key=value\n" lines (structured header, keys sorted)
//   "\n"
//   repeated tensor records:
//     u32 name length, name bytes (UTF-8)
//     u64 blob length, blob = one feature-file image (f64)
//
// Classifier weight tensors carry their class ids as feature-file labels.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "msf/error.hpp"
#include "msf/io/atomic_file.hpp"
#include "msf/io/feature_file.hpp"
#include "msf/zsl/classify.hpp"

namespace msf {

inline constexpr std::string_view kCheckpointMagic = "MSFCKPT 1\n";

using Header = std::map<std::string, std::string>;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double header_double(const Header& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw FormatError("checkpoint header lacks '" + key + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint header '" + key + "' is not a number");
  }
}

inline std::uint64_t header_u64(const Header& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw FormatError("checkpoint header lacks '" + key + "'");
  std::uint64_t v = 0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("checkpoint header '" + key + "' is not an integer");
  return v;
}

namespace detail {

struct TensorRecord {
  Matrix<double> values;
  std::optional<std::vector<ClassId>> labels;
};

class CheckpointWriter {
 public:
  void add(const std::string& name, const Matrix<double>& m, const std::vector<ClassId>* labels = nullptr) {
    records_.emplace_back(name, encode_features(m, labels, Dtype::f64));
  }
  void add_vector(const std::string& name, const std::vector<double>& v) {
    add(name, Matrix<double>(1, v.size(), v));
  }
  void add_layer(const std::string& prefix, const DenseLayer<double>& l) {
    add(prefix + ".weight", l.weight);
    add_vector(prefix + ".bias", l.bias);
  }
  void add_mlp(const std::string& prefix, const Mlp& mlp) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) add_layer(prefix + "." + std::to_string(i), mlp.layers[i]);
  }

  std::string finish(const Header& header) const {
    std::string out(kCheckpointMagic);
    for (const auto& [k, v] : header) {
      if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
        throw FormatError("checkpoint header entry '" + k + "' contains a reserved character");
      }
      out += k + "=" + v + "\n";
    }
    out += "\n";
    for (const auto& [name, blob] : records_) {
      detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out += name;
      detail::put_le<std::uint64_t>(out, blob.size());
      out += blob;
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> records_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(std::string_view bytes) {
    if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) throw FormatError("checkpoint: bad magic");
    std::size_t pos = kCheckpointMagic.size();
    while (true) {
      const auto nl = bytes.find('\n', pos);
      if (nl == std::string_view::npos) throw LengthError("checkpoint: unterminated header");
      const std::string_view line = bytes.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.empty()) break;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw FormatError("checkpoint: malformed header line");
      header_.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    }
    while (pos < bytes.size()) {
      if (bytes.size() - pos < 4) throw LengthError("checkpoint: truncated record");
      const auto name_len = detail::get_le<std::uint32_t>(bytes, pos);
      pos += 4;
      if (bytes.size() - pos < name_len + 8ull) throw LengthError("checkpoint: truncated record");
      std::string name(bytes.substr(pos, name_len));
      pos += name_len;
      const auto blob_len = detail::get_le<std::uint64_t>(bytes, pos);
      pos += 8;
      if (bytes.size() - pos < blob_len) throw LengthError("checkpoint: truncated tensor '" + name + "'");
      FeatureData data = decode_features(bytes.substr(pos, blob_len));
      pos += blob_len;
      tensors_.emplace(std::move(name), TensorRecord{std::move(data.values), std::move(data.labels)});
    }
  }

  const Header& header() const { return header_; }

  const TensorRecord& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw FormatError("checkpoint lacks tensor '" + name + "'");
    return it->second;
  }
  bool has(const std::string& name) const { return tensors_.contains(name); }

  std::vector<double> vector(const std::string& name) const {
    const auto& m = get(name).values;
    if (m.rows() != 1) throw FormatError("checkpoint tensor '" + name + "' is not a row vector");
    return {m.values().begin(), m.values().end()};
  }

  DenseLayer<double> layer(const std::string& prefix, Activation act) const {
    return DenseLayer<double>(get(prefix + ".weight").values, vector(prefix + ".bias"), act);
  }

  Mlp mlp(const std::string& prefix) const {
    Mlp out;
    for (std::size_t i = 0; has(prefix + "." + std::to_string(i) + ".weight"); ++i) {
      out.layers.push_back(layer(prefix + "." + std::to_string(i), Activation::relu));
    }
    if (out.layers.empty()) throw FormatError("checkpoint lacks layers for '" + prefix + "'");
    out.layers.back().activation = Activation::identity;
    return out;
  }

 private:
  Header header_;
  std::map<std::string, TensorRecord> tensors_;
};

inline void write_branch(CheckpointWriter& w, const std::string& prefix, const VaeBranch& b) {
  w.add_mlp(prefix + ".encoder", b.encoder);
  w.add_layer(prefix + ".mu_head", b.mu_head);
  w.add_layer(prefix + ".log_var_head", b.log_var_head);
  w.add_mlp(prefix + ".decoder", b.decoder);
}

inline VaeBranch read_branch(const CheckpointReader& r, const std::string& prefix, Modality modality) {
  VaeBranch b;
  b.modality = modality;
  for (std::size_t i = 0; r.has(prefix + ".encoder." + std::to_string(i) + ".weight"); ++i) {
    b.encoder.layers.push_back(r.layer(prefix + ".encoder." + std::to_string(i), Activation::relu));
  }
  b.mu_head = r.layer(prefix + ".mu_head", Activation::identity);
  b.log_var_head = r.layer(prefix + ".log_var_head", Activation::identity);
  b.decoder = r.mlp(prefix + ".decoder");
  return b;
}

inline void write_head(CheckpointWriter& w, const std::string& prefix, const ClassifierHead& h) {
  w.add(prefix + ".weight", h.layer.weight, &h.class_ids);
  w.add_vector(prefix + ".bias", h.layer.bias);
}

inline ClassifierHead read_head(const CheckpointReader& r, const std::string& prefix) {
  const auto& rec = r.get(prefix + ".weight");
  if (!rec.labels) throw FormatError("checkpoint head '" + prefix + "' lacks class ids");
  return ClassifierHead{DenseLayer<double>(rec.values, r.vector(prefix + ".bias"), Activation::identity), *rec.labels};
}

}  // namespace detail

// Serializes the model. Entries of `extra` are merged into the header; model
// fields (latent_dim, alpha, beta, dims, gate settings) always win.
inline std::string encode_checkpoint(const GzslModel& model, Header extra = {}) {
  detail::CheckpointWriter w;
  detail::write_branch(w, "skeleton", model.alignment.skeleton);
  detail::write_branch(w, "text", model.alignment.text);
  detail::write_head(w, "seen_head", model.seen_head);
  detail::write_head(w, "unseen_head", model.unseen_head);
  w.add_vector("gate.weights", model.gate.weights);
  w.add_vector("gate.bias", {model.gate.bias});

  Header h = std::move(extra);
  h["latent_dim"] = std::to_string(model.alignment.latent_dim());
  h["alpha"] = format_double(model.alignment.alpha);
  h["beta"] = format_double(model.alignment.beta);
  h["squared_align"] = model.alignment.squared_align ? "1" : "0";
  h["skeleton_dim"] = std::to_string(model.alignment.skeleton.input_dim());
  h["text_dim"] = std::to_string(model.alignment.text.input_dim());
  h["gate_threshold"] = format_double(model.gate.threshold);
  h["gate_features"] = std::string(to_string(model.gate_features.mode));
  h["gate_seen_width"] = std::to_string(model.gate_features.seen_width);
  h["gate_unseen_width"] = std::to_string(model.gate_features.unseen_width);
  return w.finish(h);
}

struct LoadedCheckpoint {
  GzslModel model;
  Header header;
};

inline LoadedCheckpoint decode_checkpoint(std::string_view bytes) {
  detail::CheckpointReader r(bytes);
  LoadedCheckpoint out;
  out.header = r.header();
  GzslModel& m = out.model;
  m.alignment.skeleton = detail::read_branch(r, "skeleton", Modality::skeleton);
  m.alignment.text = detail::read_branch(r, "text", Modality::text);
  m.alignment.alpha = header_double(out.header, "alpha");
  m.alignment.beta = header_double(out.header, "beta");
  m.alignment.squared_align = header_u64(out.header, "squared_align") != 0;
  m.alignment.validate();
  if (m.alignment.latent_dim() != header_u64(out.header, "latent_dim")) throw FormatError("checkpoint latent_dim disagrees with tensors");
  m.seen_head = detail::read_head(r, "seen_head");
  m.unseen_head = detail::read_head(r, "unseen_head");
  m.gate.weights = r.vector("gate.weights");
  const auto bias = r.vector("gate.bias");
  if (bias.size() != 1) throw FormatError("checkpoint gate bias must be a scalar");
  m.gate.bias = bias[0];
  m.gate.threshold = header_double(out.header, "gate_threshold");
  const auto& mode = out.header.at("gate_features");
  if (mode == "summary") {
    m.gate_features.mode = GateFeatureMode::summary;
  } else if (mode == "sorted_probabilities") {
    m.gate_features.mode = GateFeatureMode::sorted_probabilities;
  } else {
    throw FormatError("checkpoint: unknown gate feature mode '" + mode + "'");
  }
  m.gate_features.seen_width = header_u64(out.header, "gate_seen_width");
  m.gate_features.unseen_width = header_u64(out.header, "gate_unseen_width");
  if (m.gate.weights.size() != m.gate_features.dim()) throw FormatError("checkpoint gate width disagrees with its feature mode");
  return out;
}

inline void save_checkpoint(const std::filesystem::path& path, const GzslModel& model, Header extra = {}) {
  write_file_atomic(path, encode_checkpoint(model, std::move(extra)));
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  return decode_checkpoint(read_file(path));
}

}  // namespace msf
