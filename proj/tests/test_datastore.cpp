#include <gtest/gtest.h>

#include <ffpr/datastore.hpp>
#include <ffpr/simulator.hpp>

#include <filesystem>
#include <fstream>
#include <map>

#include "oracles.hpp"

using namespace ffpr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ffpr_ds_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ContainerError::Kind read_error_kind(const fs::path& p, std::ptrdiff_t* record = nullptr) {
    try {
        read_container(p);
    } catch (const ContainerError& e) {
        if (record) *record = e.record();
        return e.kind();
    }
    ADD_FAILURE() << "no error for " << p;
    return ContainerError::Kind::Io;
}

std::vector<ContainerRecord> random_records(std::size_t count, std::uint64_t seed) {
    RandomStream rng(seed);
    std::vector<ContainerRecord> recs;
    for (std::size_t i = 0; i < count; ++i) {
        ComplexImage x = oracle::random_image(rng, 5, 3);
        // Exercise awkward bit patterns too.
        x[0] = Complex{-0.0, std::numeric_limits<double>::denorm_min()};
        x[1] = Complex{std::numeric_limits<double>::max(), std::nextafter(1.0, 2.0)};
        Measurement y(9, 5);
        for (auto& v : y) v = rng.uniform(0.0, 1e6);
        recs.push_back({std::move(x), std::move(y)});
    }
    return recs;
}

double entropy(const std::vector<std::uint16_t>& levels) {
    std::map<std::uint16_t, double> hist;
    for (auto v : levels) hist[v] += 1.0;
    double h = 0.0;
    for (const auto& [level, count] : hist) {
        const double p = count / static_cast<double>(levels.size());
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace

TEST(Container, EmptyDatasetIsHeaderOnly) {
    TempDir dir;
    const fs::path p = dir.path / "empty.ffpr";
    write_container(p, {}, kFlagMeasurements, {32, 32, 64, 64});
    EXPECT_EQ(fs::file_size(p), kContainerHeaderBytes);
    const Container c = read_container(p);
    EXPECT_TRUE(c.records.empty());
    EXPECT_EQ(c.header.n1, 32u);
    EXPECT_EQ(c.header.m2, 64u);
    const auto bytes = slurp(p);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 6), std::string("FFPR1\0", 6));
}

TEST(Container, SingleRecordSize) {
    TempDir dir;
    const fs::path p = dir.path / "one.ffpr";
    DatasetSpec spec;
    spec.count = 1;
    const auto rec = generate_dataset(spec);
    write_container(p, {{rec[0].object, rec[0].measurement}}, kFlagMeasurements);
    EXPECT_EQ(fs::file_size(p), kContainerHeaderBytes + 16u * 1024u + 8u * 4096u);
    write_container(p, {{rec[0].object, std::nullopt}}, 0);
    EXPECT_EQ(fs::file_size(p), kContainerHeaderBytes + 16u * 1024u);
}

TEST(Container, HeaderLayoutIsLittleEndian) {
    TempDir dir;
    const fs::path p = dir.path / "hdr.ffpr";
    ComplexImage x(2, 3);
    x[0] = Complex{1.0, -2.0};
    write_container(p, {{x, std::nullopt}}, kFlagSymmetryBroken);
    const auto b = slurp(p);
    ASSERT_EQ(b.size(), 32u + 16u * 6u);
    EXPECT_EQ(b[6], 1);  // version
    EXPECT_EQ(b[7], 0);
    EXPECT_EQ(b[8], 1);  // record count
    EXPECT_EQ(b[12], 2);  // n1
    EXPECT_EQ(b[16], 3);  // n2
    EXPECT_EQ(b[28], 1);  // flags
    // 1.0 = 0x3FF0000000000000, stored low byte first.
    EXPECT_EQ(b[32 + 6], 0xF0);
    EXPECT_EQ(b[32 + 7], 0x3F);
}

TEST(Container, RoundTripIsBitExact) {
    TempDir dir;
    const fs::path p = dir.path / "rt.ffpr";
    const auto recs = random_records(100, 7);
    write_container(p, recs, kFlagMeasurements | kFlagSymmetryBroken);
    const auto before = slurp(p);
    const Container c = read_container(p);
    ASSERT_EQ(c.records.size(), 100u);
    EXPECT_TRUE(c.header.symmetry_broken());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        for (std::size_t k = 0; k < recs[i].object.size(); ++k) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(recs[i].object[k].real()),
                      std::bit_cast<std::uint64_t>(c.records[i].object[k].real()));
            EXPECT_EQ(std::bit_cast<std::uint64_t>(recs[i].object[k].imag()),
                      std::bit_cast<std::uint64_t>(c.records[i].object[k].imag()));
        }
        for (std::size_t k = 0; k < recs[i].measurement->size(); ++k) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>((*recs[i].measurement)[k]),
                      std::bit_cast<std::uint64_t>((*c.records[i].measurement)[k]));
        }
    }
    write_container(p, c.records, c.header.flags);
    EXPECT_EQ(slurp(p), before);
}

TEST(Container, InhomogeneousRecordsRejected) {
    TempDir dir;
    std::vector<ContainerRecord> recs = random_records(3, 8);
    recs[2].object = ComplexImage(4, 3);
    try {
        write_container(dir.path / "bad.ffpr", recs, kFlagMeasurements);
        FAIL();
    } catch (const ContainerError& e) {
        EXPECT_EQ(e.kind(), ContainerError::Kind::Inhomogeneous);
        EXPECT_EQ(e.record(), 2);
    }
    recs = random_records(2, 8);
    recs[1].measurement.reset();
    EXPECT_THROW(write_container(dir.path / "bad.ffpr", recs, kFlagMeasurements), ContainerError);
}

TEST(Container, MalformedFilesRejected) {
    TempDir dir;
    const fs::path good = dir.path / "good.ffpr";
    write_container(good, random_records(4, 9), kFlagMeasurements);
    const auto bytes = slurp(good);
    const std::size_t record = 16 * 15 + 8 * 45;

    const fs::path p = dir.path / "bad.ffpr";
    spit(p, {'X', 'X', 'X', 'X'});
    EXPECT_EQ(read_error_kind(p), ContainerError::Kind::BadMagic);
    spit(p, {});
    EXPECT_EQ(read_error_kind(p), ContainerError::Kind::BadMagic);

    auto v = bytes;
    v[6] = 2;
    spit(p, v);
    EXPECT_EQ(read_error_kind(p), ContainerError::Kind::BadVersion);

    spit(p, std::vector<unsigned char>(bytes.begin(), bytes.begin() + 20));
    EXPECT_EQ(read_error_kind(p), ContainerError::Kind::Truncated);

    std::ptrdiff_t where = -1;
    spit(p, std::vector<unsigned char>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(32 + 2 * record + 17)));
    EXPECT_EQ(read_error_kind(p, &where), ContainerError::Kind::Truncated);
    EXPECT_EQ(where, 2);

    v = bytes;
    v.push_back(0);
    spit(p, v);
    EXPECT_EQ(read_error_kind(p), ContainerError::Kind::Inhomogeneous);

    EXPECT_EQ(read_error_kind(dir.path / "missing.ffpr"), ContainerError::Kind::Io);
}

TEST(Export, PgmCases) {
    TempDir dir;
    const fs::path p = dir.path / "img.pgm";
    export_image(ComplexImage(3, 4), p, Channel::Magnitude);
    auto b = slurp(p);
    const std::string header = "P5\n4 3\n65535\n";
    ASSERT_EQ(b.size(), header.size() + 24);
    EXPECT_EQ(std::string(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(header.size())), header);
    EXPECT_TRUE(std::all_of(b.begin() + static_cast<std::ptrdiff_t>(header.size()), b.end(), [](auto c) { return c == 0; }));

    ComplexImage flat(3, 4, std::polar(2.0, 0.8));
    const auto levels = image_levels(flat, Channel::Phase, ValueTransform::Identity);
    EXPECT_TRUE(std::all_of(levels.begin(), levels.end(), [&](auto v) { return v == levels[0]; }));
    EXPECT_EQ(levels[0], static_cast<std::uint16_t>(std::lround(65535.0 * (0.8 + std::numbers::pi) / (2 * std::numbers::pi))));

    ComplexImage mag(1, 2);
    mag[0] = 1.0;
    mag[1] = Complex{0.0, 4.0};
    export_image(mag, p, Channel::Magnitude);
    b = slurp(p);
    const std::size_t h = std::string("P5\n2 1\n65535\n").size();
    EXPECT_EQ(b[h + 2], 0xFF);  // 65535, most significant byte first
    EXPECT_EQ(b[h + 3], 0xFF);
    EXPECT_EQ((b[h] << 8) | b[h + 1], 16384);
    EXPECT_THROW(image_levels(Measurement(2, 2), Channel::Phase, ValueTransform::Identity), InvalidArgument);
}

TEST(Export, FourthRootSpreadsTheHistogram) {
    DatasetSpec spec;
    spec.count = 10;
    spec.seed = 3;
    for (const auto& rec : generate_dataset(spec)) {
        const double plain = entropy(image_levels(rec.measurement, Channel::Intensity, ValueTransform::Identity));
        const double root = entropy(image_levels(rec.measurement, Channel::Intensity, ValueTransform::FourthRoot));
        EXPECT_GT(root, plain);
    }
}

TEST(Formatting, SeventeenDigitsRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}
