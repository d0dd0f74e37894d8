#include "eeamc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "eeamc/error.hpp"
#include "eeamc/kernels.hpp"

namespace eeamc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kWindowGuard = 32;           // minimum slack beyond one frame
constexpr int kSteadyTarget = kFrameLength + 2 * kWindowGuard;
constexpr int kRrcSpanSymbols = 8;
constexpr int kGaussSpanSymbols = 4;
constexpr int kAnalogTones = 3;
constexpr double kFmDeviation = 0.15;      // peak deviation, fraction of fs
constexpr double kAmModIndex = 0.5;

} // namespace

const char* scheme_name(ModulationScheme m) {
    switch (m) {
        case ModulationScheme::BPSK: return "BPSK";
        case ModulationScheme::QPSK: return "QPSK";
        case ModulationScheme::PSK8: return "8PSK";
        case ModulationScheme::QAM16: return "QAM16";
        case ModulationScheme::QAM64: return "QAM64";
        case ModulationScheme::PAM4: return "PAM4";
        case ModulationScheme::CPFSK: return "CPFSK";
        case ModulationScheme::GFSK: return "GFSK";
        case ModulationScheme::WBFM: return "WBFM";
        case ModulationScheme::AMDSB: return "AM-DSB";
    }
    return "?";
}

double IQFrame::mean_power() const {
    double p = 0.0;
    for (int t = 0; t < kFrameLength; ++t)
        p += double(i(t)) * i(t) + double(q(t)) * q(t);
    return p / kFrameLength;
}

Tensor examples_to_tensor(const LabeledExample* ex, std::size_t n) {
    Tensor x({int(n), 2, kFrameLength});
    for (std::size_t s = 0; s < n; ++s)
        std::memcpy(x.data() + s * 2 * kFrameLength, ex[s].frame.data.data(),
                    sizeof(float) * 2 * kFrameLength);
    return x;
}

void GenConfig::validate() const {
    if (samples_per_cell <= 0) throw ConfigError("gen: samples_per_cell must be positive");
    if (samples_per_symbol < 2 || samples_per_symbol > 64)
        throw ConfigError("gen: samples_per_symbol must lie in [2,64]");
    if (!(rrc_rolloff > 0.0 && rrc_rolloff <= 1.0))
        throw ConfigError("gen: rrc_rolloff must lie in (0,1]");
    if (!(gfsk_bt > 0.0)) throw ConfigError("gen: gfsk_bt must be positive");
    if (!(cpfsk_mod_index > 0.0)) throw ConfigError("gen: cpfsk_mod_index must be positive");
    if (std::abs(cfo_fraction) >= 0.5) throw ConfigError("gen: cfo_fraction must lie in (-0.5,0.5)");
}

namespace {

std::vector<double> gray_axis_levels(int bits_per_axis) {
    const int m = 1 << bits_per_axis;
    std::vector<double> level_of(static_cast<std::size_t>(m));
    for (int p = 0; p < m; ++p) {
        const int gray = p ^ (p >> 1);
        level_of[std::size_t(gray)] = double(2 * p - (m - 1));
    }
    return level_of;
}

} // namespace

std::vector<std::complex<double>> constellation(ModulationScheme m) {
    using cd = std::complex<double>;
    std::vector<cd> pts;
    switch (m) {
        case ModulationScheme::BPSK:
            pts = {cd(1, 0), cd(-1, 0)};
            break;
        case ModulationScheme::QPSK: {
            const double s = 1.0 / std::sqrt(2.0);
            for (int k = 0; k < 4; ++k)
                pts.push_back(cd((k & 1) ? -s : s, (k & 2) ? -s : s));
            break;
        }
        case ModulationScheme::PSK8:
            for (int k = 0; k < 8; ++k) {
                const int gray = k ^ (k >> 1);
                pts.push_back(std::polar(1.0, 2.0 * kPi * gray / 8.0));
            }
            break;
        case ModulationScheme::QAM16: {
            const auto axis = gray_axis_levels(2);
            const double s = 1.0 / std::sqrt(10.0);
            for (int k = 0; k < 16; ++k)
                pts.push_back(cd(axis[std::size_t(k & 3)] * s, axis[std::size_t(k >> 2)] * s));
            break;
        }
        case ModulationScheme::QAM64: {
            const auto axis = gray_axis_levels(3);
            const double s = 1.0 / std::sqrt(42.0);
            for (int k = 0; k < 64; ++k)
                pts.push_back(cd(axis[std::size_t(k & 7)] * s, axis[std::size_t(k >> 3)] * s));
            break;
        }
        case ModulationScheme::PAM4: {
            const auto axis = gray_axis_levels(2);
            const double s = 1.0 / std::sqrt(5.0);
            for (int k = 0; k < 4; ++k) pts.push_back(cd(axis[std::size_t(k)] * s, 0.0));
            break;
        }
        default:
            throw ConfigError(std::string("constellation: ") + scheme_name(m) +
                              " is not a linear digital scheme");
    }
    return pts;
}

std::vector<double> rrc_taps(double rolloff, int sps, int span_symbols) {
    const int taps = span_symbols * sps + 1;
    const int delay = span_symbols * sps / 2;
    std::vector<double> h(static_cast<std::size_t>(taps));
    const double b = rolloff;
    for (int i = 0; i < taps; ++i) {
        const double t = double(i - delay) / sps;  // in symbol periods
        double v;
        if (std::abs(t) < 1e-12) {
            v = 1.0 - b + 4.0 * b / kPi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
            v = (b / std::sqrt(2.0)) * ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
                                        (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
        } else {
            const double num = std::sin(kPi * t * (1.0 - b)) +
                               4.0 * b * t * std::cos(kPi * t * (1.0 + b));
            const double den = kPi * t * (1.0 - 16.0 * b * b * t * t);
            v = num / den;
        }
        h[std::size_t(i)] = v;
    }
    double energy = 0.0;
    for (double v : h) energy += v * v;
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : h) v *= scale;
    return h;
}

namespace {

std::vector<double> gaussian_taps(double bt, int sps, int span_symbols) {
    const int taps = span_symbols * sps + 1;
    const int delay = span_symbols * sps / 2;
    std::vector<double> h(static_cast<std::size_t>(taps));
    // sigma in symbol periods for BT product
    const double k = 2.0 * kPi * bt / std::sqrt(std::log(2.0) * 2.0);
    double sum = 0.0;
    for (int i = 0; i < taps; ++i) {
        const double t = double(i - delay) / sps;
        h[std::size_t(i)] = std::exp(-0.5 * k * k * t * t);
        sum += h[std::size_t(i)];
    }
    for (double& v : h) v /= sum;  // DC gain 1 keeps the modulation index
    return h;
}

void normalize_power(std::vector<std::complex<double>>& z) {
    double p = 0.0;
    for (const auto& v : z) p += std::norm(v);
    p /= double(z.size());
    const double s = 1.0 / std::sqrt(std::max(p, 1e-30));
    for (auto& v : z) v *= s;
}

std::vector<std::complex<double>> modulate_linear(ModulationScheme m, Rng& rng,
                                                  const GenConfig& cfg) {
    const auto points = constellation(m);
    const int sps = cfg.samples_per_symbol;
    const int nsym = (kSteadyTarget + sps - 1) / sps + kRrcSpanSymbols;
    const auto h = rrc_taps(cfg.rrc_rolloff, sps, kRrcSpanSymbols);
    const int taps = int(h.size());
    const int up_len = nsym * sps;

    std::vector<std::complex<double>> up(static_cast<std::size_t>(up_len));
    for (int s = 0; s < nsym; ++s)
        up[std::size_t(s) * sps] = points[std::size_t(rng.uniform_index(points.size()))];

    // fully-supported convolution region only: transients never reach frames
    const int out_len = up_len - (taps - 1);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(out_len));
    for (int i = 0; i < out_len; ++i) {
        std::complex<double> acc(0.0, 0.0);
        // up is sparse (one pulse per symbol); step over symbol positions
        const int lo = i;  // window covers up[i .. i+taps-1]
        const int first_sym = (lo + sps - 1) / sps;
        const int last_sym = std::min(nsym - 1, (lo + taps - 1) / sps);
        for (int s = first_sym; s <= last_sym; ++s) {
            const int rel = s * sps - lo;
            if (rel >= 0 && rel < taps) acc += up[std::size_t(s) * sps] * h[std::size_t(rel)];
        }
        out[std::size_t(i)] = acc;
    }
    normalize_power(out);
    return out;
}

std::vector<std::complex<double>> modulate_cpm(ModulationScheme m, Rng& rng,
                                               const GenConfig& cfg) {
    const int sps = cfg.samples_per_symbol;
    const int nbits = (kSteadyTarget + sps - 1) / sps + 2 * kGaussSpanSymbols;
    const int n = nbits * sps;

    std::vector<double> freq(static_cast<std::size_t>(n));
    for (int i = 0; i < nbits; ++i) {
        const double a = rng.uniform_index(2) == 0 ? 1.0 : -1.0;
        for (int s = 0; s < sps; ++s) freq[std::size_t(i * sps + s)] = a;
    }

    int start = 0, len = n;
    if (m == ModulationScheme::GFSK) {
        const auto g = gaussian_taps(cfg.gfsk_bt, sps, kGaussSpanSymbols);
        const int taps = int(g.size());
        std::vector<double> smoothed(std::size_t(n - (taps - 1)));
        for (int i = 0; i + taps <= n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < taps; ++k) acc += freq[std::size_t(i + k)] * g[std::size_t(k)];
            smoothed[std::size_t(i)] = acc;
        }
        freq = std::move(smoothed);
        len = int(freq.size());
    } else {
        // drop one guard symbol each side for symmetry with GFSK
        start = sps;
        len = n - 2 * sps;
    }

    std::vector<std::complex<double>> out(static_cast<std::size_t>(len));
    const double step = kPi * cfg.cpfsk_mod_index / sps;
    double phase = 0.0;
    for (int i = 0; i < len; ++i) {
        phase += step * freq[std::size_t(start + i)];
        out[std::size_t(i)] = std::polar(1.0, phase);
    }
    normalize_power(out);
    return out;
}

std::vector<std::complex<double>> modulate_analog(ModulationScheme m, Rng& rng,
                                                  const GenConfig& /*cfg*/) {
    const int n = kSteadyTarget;
    double tone_f[kAnalogTones], tone_p[kAnalogTones];
    for (int k = 0; k < kAnalogTones; ++k) {
        tone_f[k] = rng.uniform(0.005, 0.1);  // cycles per sample
        tone_p[k] = rng.uniform(0.0, 2.0 * kPi);
    }
    std::vector<double> msg(static_cast<std::size_t>(n));
    double peak = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int k = 0; k < kAnalogTones; ++k)
            v += std::sin(2.0 * kPi * tone_f[k] * i + tone_p[k]);
        msg[std::size_t(i)] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak < 1e-9) peak = 1.0;
    for (double& v : msg) v /= peak;

    std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
    if (m == ModulationScheme::WBFM) {
        double phase = 0.0;
        for (int i = 0; i < n; ++i) {
            phase += 2.0 * kPi * kFmDeviation * msg[std::size_t(i)];
            out[std::size_t(i)] = std::polar(1.0, phase);
        }
    } else {  // AM-DSB with carrier
        for (int i = 0; i < n; ++i)
            out[std::size_t(i)] = std::complex<double>(1.0 + kAmModIndex * msg[std::size_t(i)], 0.0);
    }
    normalize_power(out);
    return out;
}

} // namespace

std::vector<std::complex<double>> modulate(ModulationScheme m, Rng& rng, const GenConfig& cfg) {
    switch (m) {
        case ModulationScheme::BPSK:
        case ModulationScheme::QPSK:
        case ModulationScheme::PSK8:
        case ModulationScheme::QAM16:
        case ModulationScheme::QAM64:
        case ModulationScheme::PAM4:
            return modulate_linear(m, rng, cfg);
        case ModulationScheme::CPFSK:
        case ModulationScheme::GFSK:
            return modulate_cpm(m, rng, cfg);
        case ModulationScheme::WBFM:
        case ModulationScheme::AMDSB:
            return modulate_analog(m, rng, cfg);
    }
    throw ConfigError("modulate: unknown scheme");
}

IQFrame apply_channel(const std::vector<std::complex<double>>& signal, int snr_db, Rng& rng,
                      const GenConfig& cfg, ChannelDiag* diag) {
    if (int(signal.size()) < kFrameLength + kWindowGuard)
        throw ConfigError("apply_channel: signal shorter than frame plus transient guard");

    const double theta = cfg.random_phase ? rng.uniform(0.0, 2.0 * kPi) : 0.0;
    const int start = int(rng.uniform_index(signal.size() - kFrameLength + 1));

    const double noise_var = std::pow(10.0, -double(snr_db) / 10.0);  // P_s is 1
    const double namp = std::sqrt(noise_var / 2.0);

    std::complex<double> buf[kFrameLength];
    double sig_p = 0.0, noise_p = 0.0;
    for (int t = 0; t < kFrameLength; ++t) {
        const double ang = theta + 2.0 * kPi * cfg.cfo_fraction * t;
        const std::complex<double> z = signal[std::size_t(start + t)] * std::polar(1.0, ang);
        const std::complex<double> nz(rng.normal() * namp, rng.normal() * namp);
        buf[t] = z + nz;
        sig_p += std::norm(z);
        noise_p += std::norm(nz);
    }
    if (diag) {
        diag->signal_power = sig_p / kFrameLength;
        diag->noise_power = noise_p / kFrameLength;
    }

    double p = 0.0;
    for (int t = 0; t < kFrameLength; ++t) p += std::norm(buf[t]);
    p /= kFrameLength;
    const double s = 1.0 / std::sqrt(std::max(p, 1e-30));

    IQFrame frame;
    for (int t = 0; t < kFrameLength; ++t) {
        frame.i(t) = float(buf[t].real() * s);
        frame.q(t) = float(buf[t].imag() * s);
    }
    return frame;
}

LabeledExample generate_example(ModulationScheme m, int snr_db, int index, const GenConfig& cfg) {
    if (snr_db < -20 || snr_db > 20 || snr_db % 2 != 0)
        throw ConfigError("generate_example: snr_db must be even in [-20,20]");
    Rng rng(Rng::mix(cfg.seed, std::uint64_t(m), std::uint64_t(snr_index_of(snr_db)),
                     std::uint64_t(index)));
    const auto signal = modulate(m, rng, cfg);
    LabeledExample ex;
    ex.frame = apply_channel(signal, snr_db, rng, cfg);
    ex.label = std::uint8_t(m);
    ex.snr_db = std::int8_t(snr_db);
    return ex;
}

std::vector<LabeledExample> generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    const int spc = cfg.samples_per_cell;
    const std::size_t total = std::size_t(spc) * kNumSchemes * kNumSnrLevels;
    std::vector<LabeledExample> out(total);
#pragma omp parallel for schedule(dynamic, 64) num_threads(kernels::thread_count())
    for (std::ptrdiff_t flat = 0; flat < std::ptrdiff_t(total); ++flat) {
        const int label = int(flat / (std::ptrdiff_t(kNumSnrLevels) * spc));
        const int rem = int(flat % (std::ptrdiff_t(kNumSnrLevels) * spc));
        const int snr_idx = rem / spc;
        const int index = rem % spc;
        out[std::size_t(flat)] =
            generate_example(ModulationScheme(label), snr_db_at(snr_idx), index, cfg);
    }
    return out;
}

SplitResult split_dataset(const std::vector<LabeledExample>& examples, std::uint64_t seed) {
    if (examples.empty()) throw ConfigError("split_dataset: empty dataset");

    std::vector<std::vector<std::uint32_t>> cells(kNumSchemes * kNumSnrLevels);
    for (std::uint32_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        if (ex.label >= kNumSchemes) throw ConfigError("split_dataset: label out of range");
        const int snr_idx = snr_index_of(ex.snr_db);
        if (snr_idx < 0 || snr_idx >= kNumSnrLevels || ex.snr_db % 2 != 0)
            throw ConfigError("split_dataset: SNR tag out of range");
        cells[std::size_t(ex.label) * kNumSnrLevels + std::size_t(snr_idx)].push_back(i);
    }

    SplitResult res;
    res.train.reserve(examples.size());
    for (int label = 0; label < kNumSchemes; ++label)
        for (int snr_idx = 0; snr_idx < kNumSnrLevels; ++snr_idx) {
            auto& idx = cells[std::size_t(label) * kNumSnrLevels + std::size_t(snr_idx)];
            if (idx.empty()) continue;
            if (idx.size() < 10)
                throw ConfigError("split_dataset: cell (" +
                                  std::string(scheme_name(ModulationScheme(label))) + ", " +
                                  std::to_string(snr_db_at(snr_idx)) +
                                  " dB) has fewer than 10 examples");
            Rng rng(Rng::mix(seed, std::uint64_t(label), std::uint64_t(snr_idx), 0x5eedULL));
            deterministic_shuffle(idx.data(), idx.size(), rng);
            const std::size_t n_test = idx.size() / 10;
            const std::size_t n_val = (idx.size() - n_test) / 10;
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const LabeledExample& ex = examples[idx[k]];
                if (k < n_test)
                    res.test.push_back(ex);
                else if (k < n_test + n_val)
                    res.val.push_back(ex);
                else
                    res.train.push_back(ex);
            }
        }
    return res;
}

namespace {
constexpr char kAmcdMagic[4] = {'A', 'M', 'C', 'D'};
constexpr std::uint32_t kAmcdVersion = 1;
} // namespace

void write_dataset(const std::vector<LabeledExample>& examples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kAmcdMagic, 4);
    const std::uint32_t version = kAmcdVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t count = examples.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& ex : examples) {
        out.put(char(ex.label));
        out.put(char(ex.snr_db));
        out.write(reinterpret_cast<const char*>(ex.frame.data.data()),
                  std::streamsize(sizeof(float) * ex.frame.data.size()));
    }
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<LabeledExample> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::uint64_t offset = 0;
    auto need = [&](void* p, std::size_t n) {
        in.read(static_cast<char*>(p), std::streamsize(n));
        if (std::size_t(in.gcount()) != n) throw FormatError("dataset file truncated", offset);
        offset += n;
    };

    char magic[4];
    need(magic, 4);
    if (std::memcmp(magic, kAmcdMagic, 4) != 0)
        throw FormatError("bad magic (expected AMCD)", 0);
    std::uint32_t version;
    need(&version, 4);
    if (version != kAmcdVersion)
        throw FormatError("unsupported version " + std::to_string(version), 4);
    std::uint64_t count;
    need(&count, 8);

    std::vector<LabeledExample> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        LabeledExample ex;
        const std::uint64_t rec_offset = offset;
        need(&ex.label, 1);
        need(&ex.snr_db, 1);
        need(ex.frame.data.data(), sizeof(float) * ex.frame.data.size());
        if (ex.label >= kNumSchemes)
            throw FormatError("label out of range in record " + std::to_string(i), rec_offset);
        if (ex.snr_db < -20 || ex.snr_db > 20 || ex.snr_db % 2 != 0)
            throw FormatError("SNR tag out of range in record " + std::to_string(i),
                              rec_offset + 1);
        out.push_back(ex);
    }
    if (in.peek() != std::ifstream::traits_type::eof())
        throw FormatError("trailing bytes after last record", offset);
    return out;
}

} // namespace eeamc
