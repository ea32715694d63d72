#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "datagen/modem.hpp"
#include "tensor/tensor.hpp"

namespace amc::rf {

// SNR grid: -20 dB .. +18 dB in 2 dB steps.
inline constexpr int kNumSnrs = 20;
inline constexpr int kFrameLen = 128;

inline int snr_at(int index) { return -20 + 2 * index; }
inline int snr_index(int snr_db) {
  if (snr_db < -20 || snr_db > 18 || (snr_db + 20) % 2 != 0) {
    throw ParameterError("snr " + std::to_string(snr_db) + " dB not on the grid");
  }
  return (snr_db + 20) / 2;
}

// One labeled 2x128 IQ frame (row 0 = I, row 1 = Q), unit average power.
// Samples are exactly f32-representable so the file round-trip is bitwise.
struct SignalFrame {
  Tensor iq;  // [2 x 128]
  std::uint8_t label = 0;
  std::int8_t snr_db = 0;
};

struct Dataset {
  std::shared_ptr<const std::vector<SignalFrame>> frames;
  std::uint64_t split_seed = 0;
  std::vector<std::uint32_t> train_idx;
  std::vector<std::uint32_t> test_idx;

  std::size_t size() const { return frames ? frames->size() : 0; }
  const SignalFrame& frame(std::size_t i) const { return (*frames)[i]; }
};

struct ImpairOptions {
  bool carrier_offsets = true;  // random CFO (+/-100 ppm) and initial phase
};

// AWGN at the requested SNR plus random carrier frequency/phase offset.
// Expects unit average power input. Draw order: CFO, phase, then per-sample
// noise (I before Q).
std::vector<cplx> impair(const std::vector<cplx>& x, int snr_db, Rng& rng,
                         const ImpairOptions& opts = {});

// Intermediate products of one frame, exposed so tests can measure the
// realized SNR against ground truth.
struct FrameParts {
  std::vector<cplx> clean;  // post-offset unit-power window
  std::vector<cplx> noisy;  // clean + noise, before final normalization
  SignalFrame frame;
};

FrameParts generate_frame_parts(int class_id, int snr_db, std::uint64_t master_seed,
                                std::uint64_t frame_index,
                                const ImpairOptions& opts = {});

SignalFrame generate_frame(int class_id, int snr_db, std::uint64_t master_seed,
                           std::uint64_t frame_index);

// 11 classes x 20 SNRs x frames_per_cell frames, stratified 50/50 split.
Dataset build_dataset(int frames_per_cell, std::uint64_t seed);

// Recompute the stratified 50/50 split for an existing frame list.
void assign_split(Dataset& d, std::uint64_t split_seed);

// "AMCD" container, v1. Layout: magic, u16 version, u32 frame count,
// u8 n_classes, class-name table (u8 length + UTF-8 each), then per frame
// u8 label, i8 snr_db, 256 x f32 LE (I row then Q row).
void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path, std::uint64_t split_seed);

}  // namespace amc::rf
