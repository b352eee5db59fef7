#pragma once

// Offline replay of recorded mask/depth sequences through the full pipeline
// (fusion, depth gate, SPC with the fault policy).

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vinerow/episode.hpp"
#include "vinerow/error.hpp"
#include "vinerow/eval.hpp"
#include "vinerow/raster.hpp"
#include "vinerow/raster_io.hpp"
#include "vinerow/spc.hpp"

namespace vinerow::replay {

struct ReplayConfig {
  raster::RasterConfig raster;
  spc::SpcConfig spc;
  raster::RasterBounds bounds;
  double frame_rate = 30.0;  // only used to derive the timestamp column

  void validate() const {
    raster.validate();
    spc.validate();
    if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
  }
};

/// One contiguous recording. `log.steps[k].step` holds the frame index.
struct Sequence {
  std::optional<std::string> label;
  std::int64_t first_frame = 0;
  sim::EpisodeLog log;
};

struct ReplayResult {
  std::vector<Sequence> sequences;
  std::map<std::string, eval::ClassStats> per_class;  // empty without labels

  std::size_t commands() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.log.control_steps();
    return n;
  }
};

/// A frame index that does not increase, or a change of class label, starts
/// a new sequence with a fresh controller. A gap inside a sequence is a
/// missing-frame error.
inline std::vector<std::vector<raster::ManifestEntry>> split_sequences(
    const std::vector<raster::ManifestEntry>& entries) {
  std::vector<std::vector<raster::ManifestEntry>> out;
  for (const auto& e : entries) {
    if (!out.empty()) {
      const auto& prev = out.back().back();
      if (e.frame_index > prev.frame_index && e.label == prev.label) {
        if (e.frame_index != prev.frame_index + 1) {
          throw FormatError("missing frame(s) " + std::to_string(prev.frame_index + 1) + ".." +
                            std::to_string(e.frame_index - 1) + " before " +
                            e.mask_path.string());
        }
        out.back().push_back(e);
        continue;
      }
    }
    out.push_back({e});
  }
  return out;
}

inline Sequence replay_sequence(const std::vector<raster::ManifestEntry>& frames,
                                const ReplayConfig& config) {
  Sequence seq;
  seq.label = frames.front().label;
  seq.first_frame = frames.front().frame_index;
  std::optional<spc::SpcController> controller;
  std::deque<raster::SegMap> window;
  std::size_t w = 0;
  std::size_t h = 0;
  for (const auto& e : frames) {
    raster::SegMap mask = raster::load_mask(e.mask_path, e.frame_index, config.bounds);
    const raster::DepthMap depth = raster::load_depth(e.depth_path, config.bounds);
    if (!controller) {
      w = mask.cells.width();
      h = mask.cells.height();
      controller.emplace(config.spc, w, h);
      seq.log.frame_width = w;
    }
    if (mask.cells.width() != w || mask.cells.height() != h) {
      throw DimensionError("frame " + std::to_string(e.frame_index) + ": mask is " +
                           std::to_string(mask.cells.width()) + "x" +
                           std::to_string(mask.cells.height()) + ", sequence is " +
                           std::to_string(w) + "x" + std::to_string(h));
    }
    window.push_back(std::move(mask));
    if (window.size() > config.raster.s_window) window.pop_front();

    sim::StepRecord rec;
    rec.step = static_cast<std::size_t>(e.frame_index);
    rec.time = static_cast<double>(e.frame_index) / config.frame_rate;
    if (window.size() < config.raster.s_window) {
      rec.warmup = true;
    } else {
      const std::vector<raster::SegMap> fused(window.begin(), window.end());
      const auto out = controller->step(raster::preprocess(fused, depth, config.raster));
      rec.fault = out.trace.fault;
      rec.x_c = out.trace.x_c;
      rec.d = out.trace.d;
      rec.raw = out.trace.raw;
      rec.ema = out.trace.ema;
      rec.published = out.command;
    }
    seq.log.steps.push_back(rec);
  }
  seq.log.controller = controller->state();
  return seq;
}

inline ReplayResult replay_manifest(const std::vector<raster::ManifestEntry>& entries,
                                    const ReplayConfig& config) {
  config.validate();
  if (entries.empty()) throw InputError("replay: manifest has no frames");
  ReplayResult result;
  eval::ClassLogs by_class;
  for (const auto& frames : split_sequences(entries)) {
    result.sequences.push_back(replay_sequence(frames, config));
    const auto& seq = result.sequences.back();
    if (seq.label) by_class[*seq.label].push_back(eval::control_samples(seq.log));
  }
  if (!by_class.empty()) result.per_class = eval::orientation_stats(by_class);
  return result;
}

inline void write_replay_csv(std::ostream& os, const ReplayResult& result,
                             const std::vector<std::string>& metadata = {}) {
  using sim::detail::fmt_num;
  for (const auto& m : metadata) os << "# " << m << '\n';
  os << "sequence,class,frame,timestamp,x_c,d,v_raw,w_raw,v_ema,w_ema,fault\n";
  for (std::size_t k = 0; k < result.sequences.size(); ++k) {
    const auto& seq = result.sequences[k];
    for (const auto& s : seq.log.steps) {
      if (s.warmup) continue;
      os << k << ',' << seq.label.value_or("") << ',' << s.step << ',' << fmt_num(s.time) << ',';
      if (!s.fault) os << fmt_num(s.x_c) << ',' << fmt_num(s.d);
      else os << ',';
      os << ',' << fmt_num(s.raw.v_x) << ',' << fmt_num(s.raw.w_z) << ','
         << fmt_num(s.published.v_x) << ',' << fmt_num(s.published.w_z) << ','
         << (s.fault ? 1 : 0) << '\n';
    }
  }
}

/// Per-class table: mean and sample sigma of abscissa, raw and smoothed
/// commands, plus FR.
inline void write_class_stats(std::ostream& os, const std::map<std::string, eval::ClassStats>& st) {
  using sim::detail::fmt_num;
  os << "class,iterations,faults,fault_rate,abscissa_mean,abscissa_sd,v_raw_mean,v_raw_sd,"
        "w_raw_mean,w_raw_sd,v_ema_mean,v_ema_sd,w_ema_mean,w_ema_sd\n";
  for (const auto& [label, c] : st) {
    os << label << ',' << c.iterations << ',' << c.faults << ',' << fmt_num(c.fault_rate());
    for (const auto* s : {&c.abscissa, &c.v_raw, &c.w_raw, &c.v_ema, &c.w_ema}) {
      os << ',' << fmt_num(s->mean) << ',' << fmt_num(s->stddev());
    }
    os << '\n';
  }
}

}  // namespace vinerow::replay
