#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "eeamc/rng.hpp"
#include "eeamc/tensor.hpp"

namespace eeamc {

// Stable wire codes; the AMCD format and the confusion-matrix column order
// depend on this ordering.
enum class ModulationScheme : std::uint8_t {
    BPSK = 0,
    QPSK = 1,
    PSK8 = 2,
    QAM16 = 3,
    QAM64 = 4,
    PAM4 = 5,
    CPFSK = 6,
    GFSK = 7,
    WBFM = 8,
    AMDSB = 9,
};

constexpr int kNumSchemes = 10;
constexpr int kNumSnrLevels = 21;  // -20 dB .. +20 dB in 2 dB steps
constexpr int kFrameLength = 128;

const char* scheme_name(ModulationScheme m);
inline int snr_db_at(int index) { return -20 + 2 * index; }
inline int snr_index_of(int snr_db) { return (snr_db + 20) / 2; }

/// One received frame: row 0 in-phase, row 1 quadrature, 128 samples each,
/// unit mean power after channel normalization.
struct IQFrame {
    std::array<float, 2 * kFrameLength> data{};

    float& i(int t) { return data[std::size_t(t)]; }
    float& q(int t) { return data[std::size_t(kFrameLength + t)]; }
    float i(int t) const { return data[std::size_t(t)]; }
    float q(int t) const { return data[std::size_t(kFrameLength + t)]; }

    double mean_power() const;
};

struct LabeledExample {
    IQFrame frame;
    std::uint8_t label = 0;   // ModulationScheme code
    std::int8_t snr_db = 0;   // even, in [-20, 20]
};

// Batched (N,2,128) tensor from a span of examples.
Tensor examples_to_tensor(const LabeledExample* ex, std::size_t n);

struct GenConfig {
    int samples_per_cell = 200;
    std::uint64_t seed = 1;
    int samples_per_symbol = 8;
    double rrc_rolloff = 0.35;
    double gfsk_bt = 0.35;
    double cpfsk_mod_index = 0.5;
    double cfo_fraction = 0.0;   // static carrier frequency offset, fraction of fs
    bool random_phase = false;   // random initial carrier phase per frame

    void validate() const;
};

// Symbol alphabet with unit average power (linear digital schemes only).
std::vector<std::complex<double>> constellation(ModulationScheme m);

// Unit-energy root-raised-cosine filter taps (span_symbols * sps + 1 taps).
std::vector<double> rrc_taps(double rolloff, int sps, int span_symbols);

/// Clean complex baseband sequence, unit mean power, filter transients
/// already trimmed. Length >= kFrameLength + 32.
std::vector<std::complex<double>> modulate(ModulationScheme m, Rng& rng, const GenConfig& cfg);

struct ChannelDiag {
    double signal_power = 0.0;  // over the cut window, before noise
    double noise_power = 0.0;
};

/// AWGN channel at the given SNR plus the optional static offsets, then a
/// 128-sample window cut and unit-power normalization.
IQFrame apply_channel(const std::vector<std::complex<double>>& signal, int snr_db, Rng& rng,
                      const GenConfig& cfg, ChannelDiag* diag = nullptr);

/// One example from its derived seed; any (scheme, snr, index) cell entry is
/// reproducible without generating the rest of the dataset.
LabeledExample generate_example(ModulationScheme m, int snr_db, int index, const GenConfig& cfg);

/// samples_per_cell x 10 schemes x 21 SNRs examples, label-major then SNR
/// then index. Worker count follows AMC_THREADS; output is identical for
/// any worker count.
std::vector<LabeledExample> generate_dataset(const GenConfig& cfg);

struct SplitResult {
    std::vector<LabeledExample> train, val, test;
};

/// Stratified per (label, snr) cell: floor(10%) test, floor(10%) of the
/// remainder val, rest train.
SplitResult split_dataset(const std::vector<LabeledExample>& examples, std::uint64_t seed);

// AMCD file: magic "AMCD" | version u32 (=1) | count u64 | per example:
// label u8, snr_db i8, 256 float32 (I row then Q row). Little-endian.
void write_dataset(const std::vector<LabeledExample>& examples, const std::string& path);
std::vector<LabeledExample> read_dataset(const std::string& path);

} // namespace eeamc
