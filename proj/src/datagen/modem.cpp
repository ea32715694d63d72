#include "datagen/modem.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace amc::rf {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Shaping constants shared by every digital linear class.
constexpr int kSps = 8;            // samples per symbol
constexpr double kRolloff = 0.35;  // RRC roll-off
constexpr int kRrcSpan = 4;        // RRC half-length in symbols

// CPM classes.
constexpr double kCpfskIndex = 0.5;  // modulation index h
constexpr double kGfskBt = 0.35;     // Gaussian filter BT product

// Analog classes: message = white noise low-passed to 15% of Nyquist.
constexpr double kMsgCutoff = 0.075;  // fraction of sample rate
constexpr int kMsgTaps = 129;
constexpr double kAmIndex = 0.5;       // AM-DSB modulation index
constexpr double kWbfmDeviation = 0.375;  // cycles/sample at unit message

std::vector<int> random_bits(std::size_t n, Rng& rng) {
  std::vector<int> bits(n);
  for (auto& b : bits) b = static_cast<int>(rng.below(2));
  return bits;
}

// Per-axis Gray decoding tables for square QAM / PAM.
int gray2(int b1, int b0) {
  // 00 01 11 10 -> levels -3 -1 +1 +3
  static const int lut[4] = {-3, -1, 3, 1};
  return lut[b1 * 2 + b0];
}

int gray3(int b2, int b1, int b0) {
  // 000 001 011 010 110 111 101 100 -> -7 -5 -3 -1 +1 +3 +5 +7
  static const int lut[8] = {-7, -5, -1, -3, 7, 5, 1, 3};
  return lut[b2 * 4 + b1 * 2 + b0];
}

std::vector<cplx> message_signal(std::size_t n, Rng& rng) {
  std::vector<double> white(n + kMsgTaps);
  for (auto& v : white) v = rng.normal();
  auto m = fir_filter(white, lowpass_taps(kMsgCutoff, kMsgTaps));
  m.erase(m.begin(), m.begin() + kMsgTaps / 2);
  m.resize(n);
  double power = 0.0;
  for (double v : m) power += v * v;
  power /= static_cast<double>(n);
  const double s = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
  std::vector<cplx> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cplx(m[i] * s, 0.0);
  return out;
}

std::vector<double> real_part(const std::vector<cplx>& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].real();
  return out;
}

// Odd-length windowed ideal Hilbert transformer.
std::vector<double> hilbert_taps(int ntaps) {
  std::vector<double> h(static_cast<std::size_t>(ntaps), 0.0);
  const int mid = ntaps / 2;
  for (int i = 0; i < ntaps; ++i) {
    const int n = i - mid;
    if (n % 2 != 0) {
      const double wnd =
          0.54 - 0.46 * std::cos(2.0 * kPi * i / (ntaps - 1));
      h[static_cast<std::size_t>(i)] = wnd * 2.0 / (kPi * n);
    }
  }
  return h;
}

std::vector<double> gaussian_taps(double bt, int sps) {
  // Time-domain std dev in samples for a Gaussian filter of bandwidth BT/T.
  const double sigma = std::sqrt(std::log(2.0)) * sps / (2.0 * kPi * bt);
  const int half = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> g(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
    g[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (auto& v : g) v /= sum;
  return g;
}

std::vector<cplx> shape_linear(const std::vector<cplx>& symbols) {
  std::vector<cplx> up(symbols.size() * kSps, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < symbols.size(); ++i) up[i * kSps] = symbols[i];
  return fir_filter(up, rrc_taps(kRolloff, kSps, kRrcSpan));
}

std::vector<cplx> cpm_burst(std::size_t n_bits, bool gaussian, Rng& rng) {
  auto bits = random_bits(n_bits, rng);
  std::vector<double> nrz(n_bits * kSps);
  for (std::size_t i = 0; i < n_bits; ++i) {
    std::fill_n(nrz.begin() + static_cast<std::ptrdiff_t>(i * kSps), kSps,
                bits[i] ? 1.0 : -1.0);
  }
  if (gaussian) nrz = fir_filter(nrz, gaussian_taps(kGfskBt, kSps));
  std::vector<cplx> out(nrz.size());
  double phase = 0.0;
  const double step = kPi * kCpfskIndex / kSps;
  for (std::size_t i = 0; i < nrz.size(); ++i) {
    phase += step * nrz[i];
    out[i] = cplx(std::cos(phase), std::sin(phase));
  }
  return out;
}

void normalize_power(std::vector<cplx>& x) {
  double power = 0.0;
  for (const auto& v : x) power += std::norm(v);
  power /= static_cast<double>(x.size());
  if (power <= 0.0) throw NumericalError("modulated burst has zero power");
  const double s = 1.0 / std::sqrt(power);
  for (auto& v : x) v *= s;
}

}  // namespace

const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names = {
      "8PSK", "AM-DSB", "AM-SSB", "BPSK", "CPFSK", "GFSK",
      "PAM4", "QAM16", "QAM64", "QPSK", "WBFM"};
  return names;
}

int class_id(const std::string& name) {
  const auto& names = class_names();
  for (int i = 0; i < kNumClasses; ++i) {
    if (names[static_cast<std::size_t>(i)] == name) return i;
  }
  throw ParameterError("unknown modulation class: " + name);
}

int bits_per_symbol(int id) {
  switch (static_cast<Mod>(id)) {
    case Mod::kBpsk: return 1;
    case Mod::kQpsk: return 2;
    case Mod::kPsk8: return 3;
    case Mod::kQam16: return 4;
    case Mod::kQam64: return 6;
    case Mod::kPam4: return 2;
    default: return 0;
  }
}

std::vector<cplx> map_symbols(int id, const std::vector<int>& bits) {
  const int k = bits_per_symbol(id);
  if (k == 0) throw ParameterError("map_symbols: class has no symbol mapping");
  if (bits.size() % static_cast<std::size_t>(k) != 0) {
    throw ParameterError("map_symbols: bit count not a multiple of symbol size");
  }
  const std::size_t n = bits.size() / static_cast<std::size_t>(k);
  std::vector<cplx> sym(n);
  const double r2 = std::sqrt(0.5);
  for (std::size_t s = 0; s < n; ++s) {
    const int* b = bits.data() + s * static_cast<std::size_t>(k);
    switch (static_cast<Mod>(id)) {
      case Mod::kBpsk:
        sym[s] = cplx(b[0] ? -1.0 : 1.0, 0.0);
        break;
      case Mod::kQpsk: {
        // 00 -> (1+j), 01 -> (-1+j), 11 -> (-1-j), 10 -> (1-j), over sqrt(2)
        const double re = b[1] ? -1.0 : 1.0;
        const double im = b[0] ? -1.0 : 1.0;
        sym[s] = cplx(re * r2, im * r2);
        break;
      }
      case Mod::kPsk8: {
        // Point k*pi/4 carries the Gray code of k.
        static const int angle_of_gray[8] = {0, 1, 3, 2, 7, 6, 4, 5};
        const int g = b[0] * 4 + b[1] * 2 + b[2];
        const double a = kPi / 4.0 * angle_of_gray[g];
        sym[s] = cplx(std::cos(a), std::sin(a));
        break;
      }
      case Mod::kQam16: {
        const double scale = 1.0 / std::sqrt(10.0);
        sym[s] = cplx(gray2(b[0], b[1]) * scale, gray2(b[2], b[3]) * scale);
        break;
      }
      case Mod::kQam64: {
        const double scale = 1.0 / std::sqrt(42.0);
        sym[s] = cplx(gray3(b[0], b[1], b[2]) * scale,
                      gray3(b[3], b[4], b[5]) * scale);
        break;
      }
      case Mod::kPam4: {
        const double scale = 1.0 / std::sqrt(5.0);
        sym[s] = cplx(gray2(b[0], b[1]) * scale, 0.0);
        break;
      }
      default:
        throw ParameterError("map_symbols: unsupported class");
    }
  }
  return sym;
}

std::vector<double> rrc_taps(double rolloff, int sps, int span) {
  const int half = span * sps;
  std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
  for (int i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i) / sps;
    double v;
    if (i == 0) {
      v = 1.0 - rolloff + 4.0 * rolloff / kPi;
    } else if (std::abs(std::abs(4.0 * rolloff * t) - 1.0) < 1e-9) {
      v = rolloff / std::sqrt(2.0) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * rolloff)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * rolloff)));
    } else {
      const double num = std::sin(kPi * t * (1.0 - rolloff)) +
                         4.0 * rolloff * t * std::cos(kPi * t * (1.0 + rolloff));
      const double den = kPi * t * (1.0 - (4.0 * rolloff * t) * (4.0 * rolloff * t));
      v = num / den;
    }
    h[static_cast<std::size_t>(i + half)] = v;
  }
  return h;
}

std::vector<double> lowpass_taps(double cutoff, int ntaps) {
  std::vector<double> h(static_cast<std::size_t>(ntaps));
  const int mid = ntaps / 2;
  double sum = 0.0;
  for (int i = 0; i < ntaps; ++i) {
    const int n = i - mid;
    const double sinc = n == 0 ? 2.0 * cutoff
                               : std::sin(2.0 * kPi * cutoff * n) / (kPi * n);
    const double wnd = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (ntaps - 1));
    h[static_cast<std::size_t>(i)] = sinc * wnd;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (auto& v : h) v /= sum;
  return h;
}

template <typename T>
static std::vector<T> fir_apply(const std::vector<T>& x, const std::vector<double>& h) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(h.size());
  const std::ptrdiff_t delay = m / 2;
  std::vector<T> y(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    T acc{};
    const std::ptrdiff_t center = i + delay;
    for (std::ptrdiff_t k = 0; k < m; ++k) {
      const std::ptrdiff_t j = center - k;
      if (j >= 0 && j < n) acc += x[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(k)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<cplx> fir_filter(const std::vector<cplx>& x, const std::vector<double>& h) {
  return fir_apply(x, h);
}

std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& h) {
  return fir_apply(x, h);
}

std::vector<cplx> modulate(int id, std::size_t min_len, Rng& rng) {
  if (id < 0 || id >= kNumClasses) {
    throw ParameterError("modulate: unknown class id " + std::to_string(id));
  }
  std::vector<cplx> burst;
  std::size_t skip = 0;
  const Mod mod = static_cast<Mod>(id);
  switch (mod) {
    case Mod::kBpsk:
    case Mod::kQpsk:
    case Mod::kPsk8:
    case Mod::kQam16:
    case Mod::kQam64:
    case Mod::kPam4: {
      const std::size_t rrc_len = static_cast<std::size_t>(2 * kRrcSpan * kSps + 1);
      skip = 2 * rrc_len;
      const std::size_t k = static_cast<std::size_t>(bits_per_symbol(id));
      const std::size_t n_sym = (min_len + skip) / kSps + 2 * kRrcSpan + 4;
      burst = shape_linear(map_symbols(id, random_bits(n_sym * k, rng)));
      break;
    }
    case Mod::kCpfsk:
    case Mod::kGfsk: {
      const std::size_t gauss_len = gaussian_taps(kGfskBt, kSps).size();
      skip = mod == Mod::kGfsk ? 2 * gauss_len : 16;
      burst = cpm_burst((min_len + skip) / kSps + 8, mod == Mod::kGfsk, rng);
      break;
    }
    case Mod::kAmDsb: {
      skip = 2 * kMsgTaps;
      auto m = message_signal(min_len + skip + 64, rng);
      burst.resize(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        burst[i] = cplx(1.0 + kAmIndex * m[i].real(), 0.0);
      }
      break;
    }
    case Mod::kAmSsb: {
      skip = 2 * kMsgTaps;
      auto m = message_signal(min_len + skip + 64, rng);
      auto mr = real_part(m);
      auto mh = fir_filter(mr, hilbert_taps(63));
      burst.resize(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) burst[i] = cplx(mr[i], mh[i]);
      break;
    }
    case Mod::kWbfm: {
      skip = 2 * kMsgTaps;
      auto m = message_signal(min_len + skip + 64, rng);
      burst.resize(m.size());
      double phase = 0.0;
      const double step = 2.0 * kPi * kWbfmDeviation;
      for (std::size_t i = 0; i < m.size(); ++i) {
        phase += step * m[i].real();
        burst[i] = cplx(std::cos(phase), std::sin(phase));
      }
      break;
    }
  }
  if (burst.size() < skip + min_len) {
    throw NumericalError("modulate: burst shorter than requested");
  }
  burst.erase(burst.begin(), burst.begin() + static_cast<std::ptrdiff_t>(skip));
  normalize_power(burst);
  return burst;
}

}  // namespace amc::rf
