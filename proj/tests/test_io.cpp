#include <gtest/gtest.h>

#include <cstdlib>
#include <string>

#include "chamberflow/io.hpp"

using namespace chamberflow;

TEST(Io, DoublesRoundTripAtSeventeenDigits) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 1.0 + 1e-15}) {
        const std::string s = format_double(v);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
    }
    EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Io, Sha1KnownAnswers) {
    EXPECT_EQ(sha1_hex(""), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    EXPECT_EQ(sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
    // `git hash-object` of a file holding "hello\n"
    EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Io, ManifestIsCommentLines) {
    RunManifest m;
    m.command_line = "chamberflow roots --group sl2";
    m.seed = 7;
    m.input_hash = git_blob_hash("x");
    m.anchor = "root data";
    m.outputs = {"a.json"};
    m.extra = {{"k", "v"}};
    const std::string h = m.header();
    std::size_t lines = 0, start = 0;
    while (start < h.size()) {
        const auto end = h.find('\n', start);
        ASSERT_NE(end, std::string::npos);
        EXPECT_EQ(h[start], '#');
        ++lines;
        start = end + 1;
    }
    EXPECT_EQ(lines, 7u);
    EXPECT_NE(h.find("# seed: 7\n"), std::string::npos);
}

TEST(Io, CsvHeaderAndRows) {
    CsvTable csv({"t", "value"});
    csv.add_row({4.0, 0.1});
    csv.add_cells({"x", "y"});
    EXPECT_EQ(csv.str(), "t,value\n4,0.10000000000000001\nx,y\n");
    EXPECT_THROW(csv.add_row({1.0}), UsageError);
}

TEST(Io, MatrixJsonRoundTrip) {
    Matrix<3> m;
    for (int i = 0; i < 9; ++i) m.m[i] = 0.1 * i - 1.0 / 7.0;
    const auto back = matrix_from_json<3>(nlohmann::json::parse(matrix_json(m).dump()));
    EXPECT_EQ(back, m);
    EXPECT_THROW(matrix_from_json<2>(matrix_json(m)), UsageError);
}

TEST(Io, LiftJsonlRoundTripIsBitwise) {
    const auto group = schottky_preset("schottky-a");
    LiftConfig cfg;
    cfg.diffusion.group = GroupId::sl2;
    cfg.n = 6;
    cfg.count = 20;
    const auto set = build_lift(cfg, group, 1);
    const std::string text =
        "# chamberflow manifest\n# " + std::string(lift_metadata_key) + ": " + lift_metadata(set).dump() + "\n" +
        lift_jsonl(set);
    const auto back = read_lift_jsonl(text);
    ASSERT_EQ(back.samples.size(), set.samples.size());
    EXPECT_EQ(back.group_name, "schottky-a");
    EXPECT_EQ(back.n, 6);
    EXPECT_EQ(back.seed, set.seed);
    EXPECT_EQ(back.step_length, set.step_length);
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        EXPECT_EQ(back.samples[i].point.point.representative, set.samples[i].point.point.representative);
        EXPECT_EQ(back.samples[i].point.point.word, set.samples[i].point.point.word);
        EXPECT_EQ(back.samples[i].point.mark.angle, set.samples[i].point.mark.angle);
        EXPECT_EQ(back.samples[i].next_mark.angle, set.samples[i].next_mark.angle);
        EXPECT_EQ(back.samples[i].horizon, set.samples[i].horizon);
    }
    EXPECT_EQ(lift_jsonl(back), lift_jsonl(set));
}

TEST(Io, LiftReaderRejectsBadInput) {
    EXPECT_THROW(read_lift_jsonl("{\"word\":\"\"}\n"), UsageError);
    EXPECT_THROW(read_lift_jsonl("# lift: {\"preset\":\"schottky-a\"}\n"), UsageError);
    EXPECT_THROW(read_lift_jsonl("not json\n"), UsageError);
}

TEST(Io, RootDataJson) {
    const auto j = root_data_json(build_root_system<3>());
    EXPECT_EQ(j["rank"], 2);
    EXPECT_EQ(j["positive_roots"].size(), 3u);
    EXPECT_DOUBLE_EQ(j["rho_norm_sq"].get<double>(), 2.0);
}
