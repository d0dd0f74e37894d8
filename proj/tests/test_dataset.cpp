#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "eeamc/dataset.hpp"
#include "eeamc/error.hpp"

using namespace eeamc;
namespace fs = std::filesystem;

namespace {

std::string tmp_file(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "eeamc_dataset_test";
    fs::create_directories(dir);
    return (dir / name).string();
}

bool frames_bitwise_equal(const LabeledExample& a, const LabeledExample& b) {
    return a.label == b.label && a.snr_db == b.snr_db &&
           std::memcmp(a.frame.data.data(), b.frame.data.data(),
                       sizeof(float) * a.frame.data.size()) == 0;
}

} // namespace

TEST_CASE("BPSK maps bits (0,1,1,0) to symbols (+1,-1,-1,+1)") {
    const auto pts = constellation(ModulationScheme::BPSK);
    REQUIRE(pts.size() == 2);
    const int bits[4] = {0, 1, 1, 0};
    const double expected[4] = {1.0, -1.0, -1.0, 1.0};
    for (int i = 0; i < 4; ++i) {
        CHECK(pts[std::size_t(bits[i])].real() == doctest::Approx(expected[i]));
        CHECK(pts[std::size_t(bits[i])].imag() == doctest::Approx(0.0));
    }
}

TEST_CASE("QPSK constellation points all sit at unit magnitude") {
    for (const auto& p : constellation(ModulationScheme::QPSK))
        CHECK(std::abs(p) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constellations carry unit average power") {
    for (const auto m : {ModulationScheme::QAM16, ModulationScheme::QAM64,
                         ModulationScheme::PAM4, ModulationScheme::PSK8}) {
        const auto pts = constellation(m);
        double power = 0.0;
        for (const auto& p : pts) power += std::norm(p);
        CHECK(power / double(pts.size()) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("modulate emits unit-power sequences long enough for a frame plus guard") {
    GenConfig cfg;
    Rng rng(1);
    for (int code = 0; code < kNumSchemes; ++code) {
        const auto z = modulate(ModulationScheme(code), rng, cfg);
        CHECK(int(z.size()) >= kFrameLength + 32);
        double p = 0.0;
        for (const auto& v : z) p += std::norm(v);
        CHECK(p / double(z.size()) == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("noise power follows the SNR definition") {
    GenConfig cfg;
    SUBCASE("0 dB means unit noise power") {
        Rng rng(2);
        const auto z = modulate(ModulationScheme::QPSK, rng, cfg);
        double acc = 0.0;
        const int reps = 400;
        for (int i = 0; i < reps; ++i) {
            ChannelDiag diag;
            (void)apply_channel(z, 0, rng, cfg, &diag);
            acc += diag.noise_power;
        }
        CHECK(acc / reps == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("+20 dB means noise power 0.01") {
        Rng rng(3);
        const auto z = modulate(ModulationScheme::QPSK, rng, cfg);
        double acc = 0.0;
        const int reps = 400;
        for (int i = 0; i < reps; ++i) {
            ChannelDiag diag;
            (void)apply_channel(z, 20, rng, cfg, &diag);
            acc += diag.noise_power;
        }
        CHECK(acc / reps == doctest::Approx(0.01).epsilon(0.02));
    }
}

TEST_CASE("every frame is normalized to unit mean power") {
    GenConfig cfg;
    cfg.samples_per_cell = 1;
    Rng probe(4);
    for (int code = 0; code < kNumSchemes; ++code)
        for (const int snr : {-20, 0, 20}) {
            const auto ex = generate_example(ModulationScheme(code), snr, 0, cfg);
            CHECK(ex.frame.mean_power() == doctest::Approx(1.0).epsilon(1e-3));
        }
}

TEST_CASE("empirical SNR at +10 dB lands within half a dB of nominal") {
    GenConfig cfg;
    double sig = 0.0, noise = 0.0;
    const int frames = 2500;
    Rng rng(5);
    // spread over schemes like a real cell mix
    for (int i = 0; i < frames; ++i) {
        const auto scheme = ModulationScheme(i % kNumSchemes);
        const auto z = modulate(scheme, rng, cfg);
        ChannelDiag diag;
        (void)apply_channel(z, 10, rng, cfg, &diag);
        sig += diag.signal_power;
        noise += diag.noise_power;
    }
    const double est_db = 10.0 * std::log10(sig / noise);
    CHECK(est_db == doctest::Approx(10.0).epsilon(0.05));
    CHECK(std::abs(est_db - 10.0) < 0.4);
}

TEST_CASE("dataset cell counts are exactly uniform and ordered label-major") {
    GenConfig cfg;
    cfg.samples_per_cell = 3;
    const auto data = generate_dataset(cfg);
    REQUIRE(data.size() == std::size_t(3 * 10 * 21));
    int counts[10][21] = {};
    for (const auto& ex : data) counts[ex.label][snr_index_of(ex.snr_db)]++;
    for (int label = 0; label < 10; ++label)
        for (int s = 0; s < 21; ++s) CHECK(counts[label][s] == 3);
    // first block belongs to scheme 0 at -20 dB
    CHECK(data[0].label == 0);
    CHECK(data[0].snr_db == -20);
}

TEST_CASE("same seed gives a bitwise-identical dataset; subsets regenerate independently") {
    GenConfig cfg;
    cfg.samples_per_cell = 2;
    cfg.seed = 99;
    const auto a = generate_dataset(cfg);
    const auto b = generate_dataset(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(frames_bitwise_equal(a[i], b[i]));

    // one cell entry regenerated on its own matches the full run
    const auto solo = generate_example(ModulationScheme::GFSK, 4, 1, cfg);
    const std::size_t flat =
        (std::size_t(ModulationScheme::GFSK) * 21 + std::size_t(snr_index_of(4))) * 2 + 1;
    CHECK(frames_bitwise_equal(solo, a[flat]));

    GenConfig other = cfg;
    other.seed = 100;
    const auto c = generate_dataset(other);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.size() && !any_difference; ++i)
        any_difference = !frames_bitwise_equal(a[i], c[i]);
    CHECK(any_difference);
}

TEST_CASE("worker count does not change generated bytes") {
    GenConfig cfg;
    cfg.samples_per_cell = 2;
    setenv("AMC_THREADS", "1", 1);
    const auto a = generate_dataset(cfg);
    setenv("AMC_THREADS", "4", 1);
    const auto b = generate_dataset(cfg);
    unsetenv("AMC_THREADS");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(frames_bitwise_equal(a[i], b[i]));
}

TEST_CASE("paper-scale and desk-scale example counts are pure arithmetic") {
    CHECK(2000 * kNumSchemes * kNumSnrLevels == 420000);
    CHECK(200 * kNumSchemes * kNumSnrLevels == 42000);
}

TEST_CASE("stratified split follows the floor rules per cell") {
    // one synthetic cell of 2000: 200 test, 180 val, 1620 train
    std::vector<LabeledExample> cell(2000);
    for (std::size_t i = 0; i < cell.size(); ++i) {
        cell[i].label = 3;
        cell[i].snr_db = 10;
        cell[i].frame.data[0] = float(i);  // identity tag
    }
    const SplitResult res = split_dataset(cell, 7);
    CHECK(res.test.size() == 200);
    CHECK(res.val.size() == 180);
    CHECK(res.train.size() == 1620);

    std::set<float> seen;
    for (const auto* part : {&res.train, &res.val, &res.test})
        for (const auto& ex : *part) seen.insert(ex.frame.data[0]);
    CHECK(seen.size() == 2000);  // disjoint and exhaustive
}

TEST_CASE("split is stratified across cells and deterministic in the seed") {
    std::vector<LabeledExample> data;
    for (int label = 0; label < 10; ++label)
        for (int s = 0; s < 21; ++s)
            for (int i = 0; i < 20; ++i) {
                LabeledExample ex;
                ex.label = std::uint8_t(label);
                ex.snr_db = std::int8_t(snr_db_at(s));
                ex.frame.data[0] = float(label * 10000 + s * 100 + i);
                data.push_back(ex);
            }
    const SplitResult r1 = split_dataset(data, 42);
    CHECK(r1.test.size() == std::size_t(2 * 210));   // floor(20/10) per cell
    CHECK(r1.val.size() == std::size_t(1 * 210));    // floor(18/10) per cell
    CHECK(r1.train.size() == std::size_t(17 * 210));

    int per_cell_test[10][21] = {};
    for (const auto& ex : r1.test) per_cell_test[ex.label][snr_index_of(ex.snr_db)]++;
    for (int label = 0; label < 10; ++label)
        for (int s = 0; s < 21; ++s) CHECK(per_cell_test[label][s] == 2);

    const SplitResult r2 = split_dataset(data, 42);
    REQUIRE(r2.test.size() == r1.test.size());
    for (std::size_t i = 0; i < r1.test.size(); ++i)
        CHECK(r1.test[i].frame.data[0] == r2.test[i].frame.data[0]);
}

TEST_CASE("undersized cells are rejected") {
    std::vector<LabeledExample> data(9);
    for (auto& ex : data) {
        ex.label = 0;
        ex.snr_db = 0;
    }
    CHECK_THROWS_AS(split_dataset(data, 1), ConfigError);
}

TEST_CASE("AMCD format") {
    SUBCASE("empty list is a 16-byte header that reads back empty") {
        const auto path = tmp_file("empty.amcd");
        write_dataset({}, path);
        CHECK(fs::file_size(path) == 16);
        CHECK(read_dataset(path).empty());
    }
    SUBCASE("one example occupies 16 + 1026 bytes") {
        GenConfig cfg;
        const auto path = tmp_file("one.amcd");
        write_dataset({generate_example(ModulationScheme::BPSK, 0, 0, cfg)}, path);
        CHECK(fs::file_size(path) == 16 + 1026);
    }
    SUBCASE("round trip is bitwise") {
        GenConfig cfg;
        cfg.samples_per_cell = 5;
        const auto data = generate_dataset(cfg);
        const auto path = tmp_file("roundtrip.amcd");
        write_dataset(data, path);
        const auto loaded = read_dataset(path);
        REQUIRE(loaded.size() == data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            CHECK(frames_bitwise_equal(data[i], loaded[i]));
    }
    SUBCASE("bad magic fails at offset 0") {
        const auto path = tmp_file("badmagic.amcd");
        std::ofstream(path, std::ios::binary) << "WHAT" << std::string(12, '\0');
        try {
            (void)read_dataset(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset == 0);
        }
    }
    SUBCASE("bad version fails at offset 4") {
        const auto path = tmp_file("badver.amcd");
        {
            std::ofstream out(path, std::ios::binary);
            out << "AMCD";
            const std::uint32_t v = 9;
            out.write(reinterpret_cast<const char*>(&v), 4);
            const std::uint64_t n = 0;
            out.write(reinterpret_cast<const char*>(&n), 8);
        }
        try {
            (void)read_dataset(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.byte_offset == 4);
        }
    }
    SUBCASE("truncation is reported with a byte offset") {
        GenConfig cfg;
        const auto path = tmp_file("cut.amcd");
        write_dataset({generate_example(ModulationScheme::QPSK, 0, 0, cfg)}, path);
        {
            std::ifstream in(path, std::ios::binary);
            std::string bytes((std::istreambuf_iterator<char>(in)), {});
            bytes.resize(500);
            std::ofstream(path, std::ios::binary) << bytes;
        }
        CHECK_THROWS_AS((void)read_dataset(path), FormatError);
    }
}
