#include <chrono>
#include <ctime>

#include <spdlog/spdlog.h>

#include "../common/parallel.hpp"
#include "lifelog/captioning.hpp"

namespace lifelog {

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

std::string trimmed(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string now(const CaptionJobOptions& options) {
    return options.clock ? options.clock() : utc_now_iso();
}

std::string word_warning(const Caption& c, WordRange range) {
    const auto words = word_count(c.text);
    if (words >= range.min && words <= range.max) return {};
    return "caption '" + c.id.str() + "' has " + std::to_string(words) + " words (expected " +
           std::to_string(range.min) + "-" + std::to_string(range.max) + ")";
}

struct Slot {
    std::optional<Caption> caption;
    std::optional<CaptionFailure> failure;
    std::string warning;
};

// Runs `call` under the retry policy and turns every failure mode into a
// CaptionFailure so one bad frame never aborts a bulk job.
template <typename Call>
Slot attempt(const CaptionJobOptions& options, std::vector<FrameId> frames, Call&& call) {
    Slot slot;
    try {
        slot.caption = with_retry(options.retry, call);
    } catch (const TransportError& e) {
        slot.failure = CaptionFailure{std::move(frames), std::string("transport failure: ") + e.what()};
    } catch (const ImageReadError& e) {
        slot.failure = CaptionFailure{std::move(frames), std::string("unreadable image: ") + e.what()};
    } catch (const std::exception& e) {
        slot.failure = CaptionFailure{std::move(frames), std::string("captioner error: ") + e.what()};
    }
    return slot;
}

CaptionRun collect(std::vector<Slot>& slots, WordRange range) {
    CaptionRun run;
    for (auto& s : slots) {
        if (s.caption) {
            if (auto w = word_warning(*s.caption, range); !w.empty()) run.warnings.push_back(std::move(w));
            run.captions.push_back(std::move(*s.caption));
        } else if (s.failure) {
            run.failures.push_back(std::move(*s.failure));
        }
    }
    for (const auto& w : run.warnings) spdlog::warn("{}", w);
    for (const auto& f : run.failures) {
        spdlog::warn("uncaptioned ({} frame(s) starting at '{}'): {}", f.frames.size(),
                     f.frames.empty() ? std::string() : f.frames.front().str(), f.reason);
    }
    return run;
}

}  // namespace

CaptionRun caption_single(CaptionerClient& client, const Corpus& corpus,
                          const CaptionJobOptions& options) {
    if (!client.capabilities().single_image) {
        throw std::invalid_argument("caption_single: client '" + client.model_name() +
                                    "' does not accept single images");
    }
    const auto frames = corpus.frames();
    std::vector<Slot> slots(frames.size());
    const auto model = client.model_name();
    detail::parallel_for(frames.size(), options.parallelism, [&](std::size_t i) {
        const Frame& frame = frames[i];
        const auto prompt = build_single_prompt(frame, options.templates);
        const auto image = ImageRef{frame.id, corpus.absolute_image_path(frame)};
        slots[i] = attempt(options, {frame.id}, [&]() -> Caption {
            auto text = trimmed(client.describe_image(prompt, image));
            if (text.empty()) throw TransportError("empty response");
            return Caption{CaptionId("single/" + frame.id.str()), std::move(text),
                           CaptionGranularity::Single, {frame.id}, model, now(options), std::nullopt};
        });
    });
    return collect(slots, kSingleWords);
}

CaptionRun caption_collective(CaptionerClient& client, const Corpus& corpus,
                              std::span<const Window> windows, const CaptionJobOptions& options) {
    if (!client.capabilities().multi_image) {
        throw std::invalid_argument("caption_collective: client '" + client.model_name() +
                                    "' does not accept multiple images");
    }
    std::vector<Slot> slots(windows.size());
    const auto model = client.model_name();
    detail::parallel_for(windows.size(), options.parallelism, [&](std::size_t i) {
        const Window& w = windows[i];
        const auto prompt = build_collective_prompt(w, options.templates);
        std::vector<ImageRef> images;
        images.reserve(w.frames.size());
        for (const auto& f : w.frames) images.push_back(corpus.image(f));
        slots[i] = attempt(options, w.frames, [&]() -> Caption {
            auto text = trimmed(client.describe_frames(prompt, images, ResponseFormat::Text));
            if (text.empty()) throw TransportError("empty response");
            return Caption{CaptionId("collective/" + w.segment.str() + "/" +
                                     std::to_string(w.index_in_segment)),
                           std::move(text), CaptionGranularity::Collective, w.frames, model,
                           now(options), std::nullopt};
        });
    });
    return collect(slots, kCollectiveWords);
}

MergedCaptionRun caption_merged(CaptionerClient& client, std::span<const Frame> filtered_frames,
                                std::size_t batch_size,
                                const std::optional<std::string>& initial_summary,
                                const CaptionJobOptions& options) {
    const auto caps = client.capabilities();
    if (!caps.multi_image || !caps.structured_output) {
        throw std::invalid_argument("caption_merged: client '" + client.model_name() +
                                    "' needs multi-image and structured output support");
    }
    if (batch_size == 0) throw std::invalid_argument("caption_merged: batch size must be >= 1");

    MergedCaptionRun run;
    std::string previous = initial_summary.value_or("");
    const auto model = client.model_name();

    for (std::size_t start = 0, k = 1; start < filtered_frames.size(); start += batch_size, ++k) {
        const auto batch = filtered_frames.subspan(
            start, std::min(batch_size, filtered_frames.size() - start));
        const std::string batch_id = options.batch_prefix + "#" + std::to_string(k);
        std::vector<FrameId> ids;
        std::vector<ImageRef> images;
        for (const auto& f : batch) {
            ids.push_back(f.id);
            images.push_back(ImageRef{f.id, f.image_path.is_absolute() || options.image_root.empty()
                                                ? f.image_path
                                                : options.image_root / f.image_path});
        }

        const auto prompt = build_merged_prompt(batch, previous, options.templates);
        run.prompts.push_back(prompt);

        auto ask = [&](const std::string& p) {
            return with_retry(options.retry, [&] {
                return client.describe_frames(p, images, ResponseFormat::Json);
            });
        };

        std::optional<MergedBatchOutput> output;
        std::string problem;
        try {
            try {
                output = parse_merged_output(ask(prompt), ids);
            } catch (const MergedOutputError& first) {
                spdlog::warn("batch {}: rejected answer ({}), re-prompting once", batch_id, first.what());
                const std::pair<std::string, std::string> diag[] = {{"diagnostic", first.what()}};
                try {
                    output = parse_merged_output(
                        ask(prompt + render_template(options.templates.merged_retry, diag)), ids);
                } catch (const MergedOutputError& second) {
                    problem = std::string("unparseable after re-prompt: ") + second.what();
                }
            }
        } catch (const TransportError& e) {
            problem = std::string("transport failure: ") + e.what();
            run.failures.push_back(CaptionFailure{ids, problem});
        } catch (const ImageReadError& e) {
            problem = std::string("unreadable image: ") + e.what();
            run.failures.push_back(CaptionFailure{ids, problem});
        }
        if (!output) {
            output = degenerate_merged_output(ids);
            run.flagged_batches.push_back(batch_id);
            run.warnings.push_back("batch " + batch_id + " fell back to degenerate output: " + problem);
            spdlog::warn("{}", run.warnings.back());
        }

        const auto stamp = now(options);
        for (const auto& [frame, text] : output->fine_grained) {
            if (text.empty()) continue;
            run.captions.push_back(Caption{CaptionId("fine/" + batch_id + "/" + frame.str()), text,
                                           CaptionGranularity::FineGrained, {frame}, model, stamp,
                                           batch_id});
        }
        if (!output->summary.empty()) {
            Caption summary{CaptionId("summary/" + batch_id), output->summary,
                            CaptionGranularity::Summary, ids, model, stamp, batch_id};
            if (auto w = word_warning(summary, kSummaryWords); !w.empty()) {
                spdlog::warn("{}", w);
                run.warnings.push_back(std::move(w));
            }
            run.captions.push_back(std::move(summary));
        }
        for (std::size_t g = 0; g < output->coarse_groups.size(); ++g) {
            const auto& group = output->coarse_groups[g];
            if (group.text.empty()) continue;
            run.captions.push_back(Caption{
                CaptionId("coarse/" + batch_id + "/" + std::to_string(g + 1)), group.text,
                CaptionGranularity::CoarseGrained, group.frames, model, stamp, batch_id});
        }
        previous = output->summary;
    }
    run.final_summary = previous;
    return run;
}

}  // namespace lifelog
