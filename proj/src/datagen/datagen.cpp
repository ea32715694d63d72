#include "datagen/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "core/bytes.hpp"

namespace amc::rf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxCfo = 1e-4;  // +/-100 ppm of the sample rate
constexpr std::size_t kBurstLen = 1024;

// Stream path tags so the per-frame generator and the splitter never share
// a stream.
constexpr std::uint64_t kFrameTag = 1;
constexpr std::uint64_t kSplitTag = 2;

void normalize_unit_power(std::vector<cplx>& x) {
  double p = 0.0;
  for (const auto& v : x) p += std::norm(v);
  p /= static_cast<double>(x.size());
  const double s = 1.0 / std::sqrt(p);
  for (auto& v : x) v *= s;
}

SignalFrame to_frame(const std::vector<cplx>& window, int class_id, int snr_db) {
  std::vector<cplx> w = window;
  normalize_unit_power(w);
  Tensor iq({2, static_cast<std::size_t>(kFrameLen)});
  for (int i = 0; i < kFrameLen; ++i) {
    // Quantize to f32 so save/load round-trips bit-exactly.
    iq.data()[i] = static_cast<double>(static_cast<float>(w[static_cast<std::size_t>(i)].real()));
    iq.data()[kFrameLen + i] =
        static_cast<double>(static_cast<float>(w[static_cast<std::size_t>(i)].imag()));
  }
  SignalFrame f;
  f.iq = std::move(iq);
  f.label = static_cast<std::uint8_t>(class_id);
  f.snr_db = static_cast<std::int8_t>(snr_db);
  return f;
}

}  // namespace

std::vector<cplx> impair(const std::vector<cplx>& x, int snr_db, Rng& rng,
                         const ImpairOptions& opts) {
  std::vector<cplx> y(x.size());
  if (opts.carrier_offsets) {
    const double f_off = rng.uniform(-kMaxCfo, kMaxCfo);
    const double phase0 = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double ph = phase0 + 2.0 * kPi * f_off * static_cast<double>(n);
      y[n] = x[n] * cplx(std::cos(ph), std::sin(ph));
    }
  } else {
    y = x;
  }
  const double sigma2 = std::pow(10.0, -snr_db / 10.0);
  const double s = std::sqrt(sigma2 / 2.0);
  for (auto& v : y) {
    const double ni = rng.normal();
    const double nq = rng.normal();
    v += cplx(s * ni, s * nq);
  }
  return y;
}

FrameParts generate_frame_parts(int class_id, int snr_db, std::uint64_t master_seed,
                                std::uint64_t frame_index, const ImpairOptions& opts) {
  if (class_id < 0 || class_id >= kNumClasses) {
    throw ParameterError("unknown class id " + std::to_string(class_id));
  }
  const int s_idx = snr_index(snr_db);
  Rng rng = Rng::stream(master_seed,
                        {kFrameTag, static_cast<std::uint64_t>(class_id),
                         static_cast<std::uint64_t>(s_idx), frame_index});

  auto burst = modulate(class_id, kBurstLen, rng);
  const std::size_t start =
      static_cast<std::size_t>(rng.below(burst.size() - kFrameLen + 1));
  std::vector<cplx> window(burst.begin() + static_cast<std::ptrdiff_t>(start),
                           burst.begin() + static_cast<std::ptrdiff_t>(start + kFrameLen));
  normalize_unit_power(window);

  FrameParts parts;
  // Apply offsets and noise in two stages so the clean rotated window is
  // observable; the rng draw order matches impair().
  if (opts.carrier_offsets) {
    const double f_off = rng.uniform(-kMaxCfo, kMaxCfo);
    const double phase0 = rng.uniform(0.0, 2.0 * kPi);
    parts.clean.resize(window.size());
    for (std::size_t n = 0; n < window.size(); ++n) {
      const double ph = phase0 + 2.0 * kPi * f_off * static_cast<double>(n);
      parts.clean[n] = window[n] * cplx(std::cos(ph), std::sin(ph));
    }
  } else {
    parts.clean = window;
  }
  const double sigma2 = std::pow(10.0, -snr_db / 10.0);
  const double s = std::sqrt(sigma2 / 2.0);
  parts.noisy = parts.clean;
  for (auto& v : parts.noisy) {
    const double ni = rng.normal();
    const double nq = rng.normal();
    v += cplx(s * ni, s * nq);
  }
  parts.frame = to_frame(parts.noisy, class_id, snr_db);
  return parts;
}

SignalFrame generate_frame(int class_id, int snr_db, std::uint64_t master_seed,
                           std::uint64_t frame_index) {
  return generate_frame_parts(class_id, snr_db, master_seed, frame_index).frame;
}

void assign_split(Dataset& d, std::uint64_t split_seed) {
  d.split_seed = split_seed;
  d.train_idx.clear();
  d.test_idx.clear();
  // Stratified by (class, snr): shuffle each cell, first half trains.
  std::vector<std::vector<std::uint32_t>> cells(
      static_cast<std::size_t>(kNumClasses * kNumSnrs));
  for (std::uint32_t i = 0; i < d.size(); ++i) {
    const auto& f = d.frame(i);
    const int cell = f.label * kNumSnrs + snr_index(f.snr_db);
    cells[static_cast<std::size_t>(cell)].push_back(i);
  }
  for (std::size_t cell = 0; cell < cells.size(); ++cell) {
    auto& idx = cells[cell];
    if (idx.empty()) continue;
    Rng rng = Rng::stream(split_seed, {kSplitTag, cell});
    rng.shuffle(idx);
    const std::size_t n_train = (idx.size() + 1) / 2;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_train ? d.train_idx : d.test_idx).push_back(idx[i]);
    }
  }
  std::sort(d.train_idx.begin(), d.train_idx.end());
  std::sort(d.test_idx.begin(), d.test_idx.end());
}

Dataset build_dataset(int frames_per_cell, std::uint64_t seed) {
  if (frames_per_cell < 1) {
    throw ParameterError("frames_per_cell must be >= 1");
  }
  std::vector<SignalFrame> frames;
  frames.reserve(static_cast<std::size_t>(kNumClasses * kNumSnrs * frames_per_cell));
  for (int c = 0; c < kNumClasses; ++c) {
    for (int s = 0; s < kNumSnrs; ++s) {
      for (int f = 0; f < frames_per_cell; ++f) {
        frames.push_back(generate_frame(c, snr_at(s), seed,
                                        static_cast<std::uint64_t>(f)));
      }
    }
  }
  Dataset d;
  d.frames = std::make_shared<const std::vector<SignalFrame>>(std::move(frames));
  assign_split(d, seed);
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  ByteWriter w;
  w.magic("AMCD");
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(d.size()));
  w.u8(static_cast<std::uint8_t>(kNumClasses));
  for (const auto& name : class_names()) w.str8(name);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& f = d.frame(i);
    w.u8(f.label);
    w.i8(f.snr_db);
    for (std::size_t j = 0; j < 2 * kFrameLen; ++j) {
      w.f32(static_cast<float>(f.iq.data()[j]));
    }
  }
  write_file(path, w.bytes());
}

Dataset load_dataset(const std::filesystem::path& path, std::uint64_t split_seed) {
  const auto bytes = read_file(path);
  ByteReader r(bytes);
  r.expect_magic("AMCD", "dataset");
  const std::uint16_t version = r.u16();
  if (version != 1) {
    throw FormatError("dataset: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  const std::uint8_t n_classes = r.u8();
  if (n_classes != kNumClasses) {
    throw FormatError("dataset: expected 11 classes, found " + std::to_string(n_classes));
  }
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string name = r.str8();
    if (name != class_names()[static_cast<std::size_t>(c)]) {
      throw FormatError("dataset: unexpected class table entry '" + name + "'");
    }
  }
  std::vector<SignalFrame> frames;
  frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    SignalFrame f;
    f.label = r.u8();
    f.snr_db = r.i8();
    if (f.label >= kNumClasses) throw FormatError("dataset: label out of range");
    snr_index(f.snr_db);  // validates the grid
    f.iq = Tensor({2, static_cast<std::size_t>(kFrameLen)});
    for (std::size_t j = 0; j < 2 * kFrameLen; ++j) {
      f.iq.data()[j] = static_cast<double>(r.f32());
    }
    frames.push_back(std::move(f));
  }
  r.expect_end("dataset");
  Dataset d;
  d.frames = std::make_shared<const std::vector<SignalFrame>>(std::move(frames));
  assign_split(d, split_seed);
  return d;
}

}  // namespace amc::rf
