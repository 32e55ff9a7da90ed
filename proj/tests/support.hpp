#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "mvc/dataio.hpp"
#include "mvc/numcore.hpp"
#include "mvc/rng.hpp"

namespace mvc::testing {

using num::Array;
using num::ParamStore;
using num::Shape;
using num::Tape;
using num::Var;

inline Array random_array(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array a(shape);
  for (auto& v : a.values()) v = rng.uniform(lo, hi);
  return a;
}

inline double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

using LossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Max relative error between tape gradients and central differences over
// every input element.
inline double gradcheck(const std::vector<Array>& inputs, const LossFn& f, double h = 1e-5) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& a : inputs) vars.push_back(tape.variable(a));
  tape.backward(f(tape, vars));
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Array g = tape.grad(vars[i]);
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      auto eval = [&](double delta) {
        std::vector<Array> shifted = inputs;
        shifted[i][j] += delta;
        Tape t;
        std::vector<Var> vs;
        for (const auto& a : shifted) vs.push_back(t.variable(a));
        return f(t, vs).value().item();
      };
      const double numeric = (eval(h) - eval(-h)) / (2 * h);
      worst = std::max(worst, rel_error(g[j], numeric));
    }
  }
  return worst;
}

using StoreLossFn = std::function<Var(Tape&, ParamStore&)>;

// Same check against the gradients backward() writes into a ParamStore.
inline double gradcheck_store(ParamStore& store, const StoreLossFn& f, double h = 1e-5) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(f(tape, store));
  }
  double worst = 0.0;
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    const Array analytic = e.grad;
    for (std::size_t j = 0; j < e.value.size(); ++j) {
      const double keep = e.value[j];
      e.value[j] = keep + h;
      double up;
      {
        Tape t;
        up = f(t, store).value().item();
      }
      e.value[j] = keep - h;
      double down;
      {
        Tape t;
        down = f(t, store).value().item();
      }
      e.value[j] = keep;
      worst = std::max(worst, rel_error(analytic[j], (up - down) / (2 * h)));
    }
  }
  store.zero_grad();
  return worst;
}

// In-memory manifest: each object gets `rotations` rotation videos and one
// hodgepodge video of `frames` frames at fps. Image paths are placeholders.
inline std::vector<data::FrameRecord> grid_records(int classes, int objects, int rotations, int frames,
                                                   double fps) {
  std::vector<data::FrameRecord> out;
  int video = 0;
  for (int c = 0; c < classes; ++c)
    for (int o = 0; o < objects; ++o)
      for (int v = 0; v <= rotations; ++v, ++video) {
        const auto kind = v == rotations ? data::VideoKind::hodgepodge : static_cast<data::VideoKind>(v % 6);
        for (int k = 0; k < frames; ++k)
          out.push_back({c, o, video, kind, k / fps,
                         "c" + std::to_string(c) + "/o" + std::to_string(o) + "_v" + std::to_string(v) + "_f" +
                             std::to_string(k) + ".ppm",
                         {1.0 + k, 2.0, 10.0, 12.0}});
      }
  return out;
}

inline data::Manifest grid_manifest(int classes, int objects, int rotations, int frames, double fps) {
  return data::Manifest(grid_records(classes, objects, rotations, frames, fps), fps);
}

// Writes a grid manifest with w×w PPM frames under dir and loads it back.
// Pixel (0,0) of channel 0 encodes the class, channel 1 the object; channel 2
// holds a diagonal stripe pattern shifted by the class.
inline data::Manifest write_grid_dataset(const std::filesystem::path& dir, int classes, int objects, int rotations,
                                         int frames, double fps, int w = 8) {
  auto recs = grid_records(classes, objects, rotations, frames, fps);
  for (auto& r : recs) {
    r.bbox = {0, 0, static_cast<double>(w), static_cast<double>(w)};
    data::Image img(w, w, 0.5f);
    for (int y = 0; y < w; ++y)
      for (int x = 0; x < w; ++x) img.at(2, y, x) = (x + y + r.class_id) % 3 == 0 ? 0.9f : 0.1f;
    img.at(0, 0, 0) = static_cast<float>(r.class_id) / 255.0f;
    img.at(1, 0, 0) = static_cast<float>(r.object_id) / 255.0f;
    std::filesystem::create_directories((dir / r.image).parent_path());
    data::write_ppm(img, dir / r.image);
  }
  data::write_manifest(data::Manifest(recs, fps), dir / "manifest.jsonl");
  return data::load_manifest(dir / "manifest.jsonl");
}

// Unique scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mvc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace mvc::testing
