#pragma once

// Small synthetic data and a cheap architecture for fast training tests.
// Classes are separable by tone frequency, nothing radio-specific.

#include <cmath>
#include <vector>

#include "eeamc/arch.hpp"
#include "eeamc/dataset.hpp"
#include "eeamc/rng.hpp"

namespace toy {

inline eeamc::ArchConfig tiny_arch(float dropout = 0.0f) {
    eeamc::ArchConfig cfg;
    cfg.conv_channels = {4, 4, 4, 4, 4, 4};
    cfg.fc_widths = {16, 12, 10};
    cfg.exit_fc_width = 8;
    cfg.dropout_rate = dropout;
    return cfg;
}

inline std::vector<eeamc::LabeledExample> make_examples(int n, eeamc::Rng& rng,
                                                        double noise = 0.05,
                                                        bool random_labels = false) {
    std::vector<eeamc::LabeledExample> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int label = int(rng.uniform_index(10));
        const double f = (2.0 + 3.0 * label) / 128.0;
        auto& ex = out[std::size_t(i)];
        ex.label = std::uint8_t(random_labels ? rng.uniform_index(10) : std::uint64_t(label));
        ex.snr_db = std::int8_t(-20 + 2 * int(rng.uniform_index(21)));
        const double phase = rng.uniform(0.0, 6.28318);
        for (int t = 0; t < eeamc::kFrameLength; ++t) {
            ex.frame.i(t) = float(std::sin(6.28318 * f * t + phase) + noise * rng.normal());
            ex.frame.q(t) = float(std::cos(6.28318 * f * t + phase) + noise * rng.normal());
        }
    }
    return out;
}

} // namespace toy
