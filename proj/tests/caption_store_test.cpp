#include <thread>

#include <gtest/gtest.h>

#include "fixture.hpp"
#include "lifelog/captions.hpp"

namespace lifelog {
namespace {

using testing::TempDir;

Caption make(const std::string& id, CaptionGranularity g, std::vector<std::string> frames) {
    Caption c;
    c.id = CaptionId(id);
    c.text = "walking in a park";
    c.granularity = g;
    for (auto& f : frames) c.frame_ids.emplace_back(f);
    c.model = "m";
    c.generated_at = "2024-01-01T00:00:00Z";
    return c;
}

TEST(Granularity, NamesRoundTrip) {
    for (auto g : {CaptionGranularity::Single, CaptionGranularity::Collective, CaptionGranularity::FineGrained,
                   CaptionGranularity::CoarseGrained, CaptionGranularity::Summary}) {
        EXPECT_EQ(parse_granularity(to_string(g)), g);
    }
    EXPECT_EQ(parse_granularity("fine"), CaptionGranularity::FineGrained);
    EXPECT_EQ(parse_granularity("coarse"), CaptionGranularity::CoarseGrained);
    EXPECT_THROW(parse_granularity("medium"), std::invalid_argument);
}

TEST(CaptionValidation, EnforcesInvariants) {
    EXPECT_EQ(validate_caption(make("a", CaptionGranularity::Single, {"f1"})), "");
    EXPECT_NE(validate_caption(make("a", CaptionGranularity::Single, {"f1", "f2"})), "");
    EXPECT_NE(validate_caption(make("a", CaptionGranularity::FineGrained, {"f1", "f2"})), "");
    EXPECT_NE(validate_caption(make("a", CaptionGranularity::Collective, {})), "");
    EXPECT_NE(validate_caption(make("a", CaptionGranularity::Collective, {"f1", "f1"})), "");
    EXPECT_NE(validate_caption(make("", CaptionGranularity::Single, {"f1"})), "");
    auto empty_text = make("a", CaptionGranularity::Single, {"f1"});
    empty_text.text.clear();
    EXPECT_NE(validate_caption(empty_text), "");
}

TEST(CaptionValidation, ChecksFramesAgainstCorpus) {
    TempDir dir;
    const auto corpus = ingest_manifest(testing::write_synthetic_corpus(dir.path(), {{"a", "b", "c"}})).corpus;
    EXPECT_EQ(validate_caption(make("c", CaptionGranularity::Collective, {"d0_0000", "d0_0001"}), &corpus), "");
    EXPECT_NE(validate_caption(make("c", CaptionGranularity::Collective, {"d0_0001", "d0_0000"}), &corpus), "");
    EXPECT_NE(validate_caption(make("c", CaptionGranularity::Single, {"ghost"}), &corpus), "");
}

TEST(CaptionStore, RoundTripsEveryField) {
    TempDir dir;
    auto a = make("single/f1", CaptionGranularity::Single, {"f1"});
    auto b = make("coarse/x#1/1", CaptionGranularity::CoarseGrained, {"f1", "f2"});
    b.batch_id = "x#1";
    b.text = "quotes \" and unicode ’ survive\nnewlines too";
    save_captions(dir / "c.jsonl", {a, b});
    const auto loaded = load_captions(dir / "c.jsonl");
    EXPECT_EQ(loaded, (std::vector<Caption>{a, b}));
    EXPECT_EQ(caption_from_json_line(caption_to_json_line(b)), b);
}

TEST(CaptionStore, ErrorsCarryLineNumbers) {
    TempDir dir;
    const auto good = caption_to_json_line(make("a", CaptionGranularity::Single, {"f1"}));
    auto expect_line = [&](const std::string& content, std::size_t line) {
        testing::write_file(dir / "bad.jsonl", content);
        try {
            load_captions(dir / "bad.jsonl");
            ADD_FAILURE() << "expected failure for: " << content;
        } catch (const CaptionStoreError& e) {
            EXPECT_EQ(e.line(), line) << e.what();
            EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos);
        }
    };
    expect_line(good + "\n" + good + "\n", 2);                // duplicate id
    expect_line(good + "\n\n{broken\n", 3);                   // invalid JSON
    expect_line(R"({"caption_id":"x","text":"t","granularity":"huge","frame_ids":["f"],"model":"m","generated_at":"g"})"
                "\n",
                1);
    expect_line(R"({"caption_id":"x","text":"t","granularity":"single","model":"m","generated_at":"g"})" "\n", 1);
}

TEST(CaptionStore, WriterAppendsConcurrently) {
    TempDir dir;
    {
        CaptionStoreWriter writer(dir / "w.jsonl", true);
        std::vector<std::jthread> threads;
        for (int t = 0; t < 4; ++t) {
            threads.emplace_back([&, t] {
                for (int i = 0; i < 50; ++i) {
                    writer.append(make("c" + std::to_string(t) + "_" + std::to_string(i), CaptionGranularity::Single,
                                       {"f"}));
                }
            });
        }
    }
    EXPECT_EQ(load_captions(dir / "w.jsonl").size(), 200u);
}

TEST(WordCount, CountsWhitespaceSeparatedTokens) {
    EXPECT_EQ(word_count(""), 0u);
    EXPECT_EQ(word_count("  one\ttwo\nthree  "), 3u);
}

}  // namespace
}  // namespace lifelog
