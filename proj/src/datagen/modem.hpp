#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace amc::rf {

using cplx = std::complex<double>;

// The eleven modulation classes, ids assigned by sorted name order.
enum class Mod : int {
  kPsk8 = 0,   // 8PSK
  kAmDsb = 1,  // AM-DSB
  kAmSsb = 2,  // AM-SSB
  kBpsk = 3,   // BPSK
  kCpfsk = 4,  // CPFSK
  kGfsk = 5,   // GFSK
  kPam4 = 6,   // PAM4
  kQam16 = 7,  // QAM16
  kQam64 = 8,  // QAM64
  kQpsk = 9,   // QPSK
  kWbfm = 10,  // WBFM
};

inline constexpr int kNumClasses = 11;

const std::vector<std::string>& class_names();
int class_id(const std::string& name);

// Bits per symbol for the digital linear classes; 0 for analog/CPM classes.
int bits_per_symbol(int class_id);

// Gray-mapped constellation point sequence for a digital class (pre pulse
// shaping). Bit count must be a multiple of bits_per_symbol.
std::vector<cplx> map_symbols(int class_id, const std::vector<int>& bits);

// Root-raised-cosine taps: odd length 2*span*sps+1, unit peak convention.
std::vector<double> rrc_taps(double rolloff, int sps, int span);

// Windowed-sinc low-pass FIR (Hamming), cutoff as a fraction of the sample
// rate; odd tap count, unity DC gain.
std::vector<double> lowpass_taps(double cutoff, int ntaps);

// Centered FIR filtering, output length == input length.
std::vector<cplx> fir_filter(const std::vector<cplx>& x, const std::vector<double>& h);
std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& h);

// Modulated baseband burst with unit average power and the shaping-filter
// transient already trimmed; at least min_len samples remain. Deterministic
// given the rng state.
std::vector<cplx> modulate(int class_id, std::size_t min_len, Rng& rng);

}  // namespace amc::rf
