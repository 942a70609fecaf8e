#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msf/error.hpp"
#include "msf/tensor/matrix.hpp"

namespace msf {

using ClassId = std::uint32_t;

enum class Channel { label, action_description, motion_description };

inline constexpr std::array<Channel, 3> kChannelOrder = {
    Channel::label, Channel::action_description, Channel::motion_description};

inline std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::label: return "LB";
    case Channel::action_description: return "AD";
    case Channel::motion_description: return "MD";
  }
  return "?";
}

// The five channel subsets compared in the ablation study.
enum class SemanticMode { lb, ad, md, ad_md, lb_ad_md };

inline constexpr std::array<SemanticMode, 5> kAllSemanticModes = {
    SemanticMode::lb, SemanticMode::ad, SemanticMode::md, SemanticMode::ad_md,
    SemanticMode::lb_ad_md};

inline std::string_view to_string(SemanticMode mode) {
  switch (mode) {
    case SemanticMode::lb: return "LB";
    case SemanticMode::ad: return "AD";
    case SemanticMode::md: return "MD";
    case SemanticMode::ad_md: return "AD+MD";
    case SemanticMode::lb_ad_md: return "LB+AD+MD";
  }
  return "?";
}

inline SemanticMode parse_semantic_mode(std::string_view text) {
  for (SemanticMode m : kAllSemanticModes) {
    if (text == to_string(m)) return m;
  }
  throw ConfigError("unknown semantic mode '" + std::string(text) +
                    "' (expected LB, AD, MD, AD+MD or LB+AD+MD)");
}

// Active channels of a mode, always in LB, AD, MD order.
inline std::vector<Channel> active_channels(SemanticMode mode) {
  switch (mode) {
    case SemanticMode::lb: return {Channel::label};
    case SemanticMode::ad: return {Channel::action_description};
    case SemanticMode::md: return {Channel::motion_description};
    case SemanticMode::ad_md: return {Channel::action_description, Channel::motion_description};
    case SemanticMode::lb_ad_md: return {kChannelOrder.begin(), kChannelOrder.end()};
  }
  return {};
}

// Per-class text features for the three semantic channels. Row i of every
// present channel belongs to class_ids[i]. A channel may be absent when the
// modes in use never read it.
struct SemanticBundle {
  std::vector<ClassId> class_ids;
  std::optional<Matrix<double>> label;
  std::optional<Matrix<double>> action_description;
  std::optional<Matrix<double>> motion_description;

  const std::optional<Matrix<double>>& channel(Channel c) const {
    switch (c) {
      case Channel::label: return label;
      case Channel::action_description: return action_description;
      case Channel::motion_description: return motion_description;
    }
    return label;
  }
  std::optional<Matrix<double>>& channel(Channel c) {
    return const_cast<std::optional<Matrix<double>>&>(std::as_const(*this).channel(c));
  }

  // Width K of the first present channel; 0 when none is present.
  std::size_t channel_dim() const {
    for (Channel c : kChannelOrder) {
      if (channel(c)) return channel(c)->cols();
    }
    return 0;
  }

  std::size_t width(Channel c) const { return channel(c) ? channel(c)->cols() : 0; }

  void validate() const {
    std::vector<ClassId> sorted = class_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("semantic bundle has duplicate class ids");
    }
    for (Channel c : kChannelOrder) {
      const auto& m = channel(c);
      if (!m) continue;
      if (m->rows() != class_ids.size()) {
        throw ShapeError("channel " + std::string(channel_name(c)) + " has " +
                         std::to_string(m->rows()) + " rows for " +
                         std::to_string(class_ids.size()) + " classes");
      }
      if (!m->all_finite()) throw NumericError("semantic channel " + std::string(channel_name(c)) + " holds non-finite values");
    }
  }
};

// Fused class prototypes keyed by class id.
class PrototypeTable {
 public:
  PrototypeTable() = default;
  PrototypeTable(std::vector<ClassId> class_ids, Matrix<double> values)
      : class_ids_(std::move(class_ids)), values_(std::move(values)) {
    if (class_ids_.size() != values_.rows()) throw ShapeError("prototype table row count mismatch");
    for (std::size_t i = 0; i < class_ids_.size(); ++i) {
      if (!index_.emplace(class_ids_[i], i).second) {
        throw ConfigError("duplicate class id " + std::to_string(class_ids_[i]) + " in prototypes");
      }
    }
  }

  std::size_t dim() const noexcept { return values_.cols(); }
  std::size_t size() const noexcept { return class_ids_.size(); }
  const std::vector<ClassId>& class_ids() const noexcept { return class_ids_; }
  const Matrix<double>& values() const noexcept { return values_; }
  bool contains(ClassId id) const { return index_.contains(id); }

  std::span<const double> row(ClassId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw LookupError("no semantic prototype for class " + std::to_string(id));
    return values_.row(it->second);
  }

  // One prototype row per entry of `ids`, e.g. the text targets of a batch.
  Matrix<double> gather(std::span<const ClassId> ids) const {
    Matrix<double> out(ids.size(), dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto src = row(ids[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

 private:
  std::vector<ClassId> class_ids_;
  Matrix<double> values_;
  std::map<ClassId, std::size_t> index_;
};

struct FusionOptions {
  // Scale each channel row to unit L2 norm before concatenation. Off by default:
  // the fused prototype is the raw concatenation.
  bool l2_normalize_channels = false;
};

inline std::size_t fused_dim(const SemanticBundle& bundle, SemanticMode mode) {
  std::size_t dim = 0;
  for (Channel c : active_channels(mode)) dim += bundle.width(c);
  return dim;
}

// Concatenates the given channels per class. Channels are always laid out in
// LB, AD, MD order regardless of the order they are listed in.
inline PrototypeTable fuse_channels(const SemanticBundle& bundle, std::span<const Channel> requested,
                                    const FusionOptions& options = {}) {
  std::vector<Channel> channels;
  for (Channel c : kChannelOrder) {
    if (std::find(requested.begin(), requested.end(), c) == requested.end()) continue;
    if (!bundle.channel(c)) {
      throw ConfigError("semantic channel " + std::string(channel_name(c)) +
                        " is required but was not provided");
    }
    channels.push_back(c);
  }
  if (channels.empty()) throw ConfigError("no semantic channel selected for fusion");
  bundle.validate();
  std::size_t width = 0;
  for (Channel c : channels) width += bundle.width(c);
  const std::size_t n = bundle.class_ids.size();
  Matrix<double> fused(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = fused.row(i);
    std::size_t offset = 0;
    for (Channel c : channels) {
      auto src = bundle.channel(c)->row(i);
      const std::size_t k = src.size();
      double norm = 1.0;
      if (options.l2_normalize_channels) {
        double sq = 0.0;
        for (double v : src) sq += v * v;
        if (sq > 0.0) norm = std::sqrt(sq);
      }
      for (std::size_t j = 0; j < k; ++j) dst[offset + j] = src[j] / norm;
      offset += k;
    }
  }
  return PrototypeTable(bundle.class_ids, std::move(fused));
}

inline PrototypeTable fuse_semantics(const SemanticBundle& bundle, SemanticMode mode,
                                     const FusionOptions& options = {}) {
  const auto channels = active_channels(mode);
  return fuse_channels(bundle, channels, options);
}

inline std::span<const double> prototype_for(const PrototypeTable& fused, ClassId id) {
  return fused.row(id);
}

}  // namespace msf
