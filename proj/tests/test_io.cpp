#include "mvtrack/io/config_file.hpp"
#include "mvtrack/io/pipeline.hpp"
#include "mvtrack/io/records.hpp"
#include "mvtrack/io/rig.hpp"
#include "mvtrack/io/scenario.hpp"
#include "mvtrack/io/selfcheck.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <sstream>

using namespace mvtrack;
using namespace mvtrack::io;

namespace {

const char* kRecord =
    R"({"sequence_id":"s","timestamp":0.5,"detections":[{"box":[1,2,1.5,2,0.5,4,1,0,3,0],"class":"car","score":0.8}]})";

std::vector<FrameRecord> parse(const std::string& text, bool require_track_id = false) {
    std::istringstream is(text);
    return parse_records(is, require_track_id);
}

std::string parse_error(const std::string& text, bool require_track_id = false) {
    try {
        (void)parse(text, require_track_id);
    } catch (const ParseError& e) {
        return std::to_string(e.line()) + "|" + e.what();
    }
    return "no error";
}

} // namespace

TEST(Records, EmptyInput) {
    EXPECT_TRUE(parse("").empty());
    EXPECT_TRUE(parse("\n  \n").empty());
}

TEST(Records, ParsesFields) {
    const auto recs = parse(kRecord);
    ASSERT_EQ(recs.size(), 1u);
    const auto& d = recs[0].detections.at(0);
    EXPECT_EQ(recs[0].sequence_id, "s");
    EXPECT_DOUBLE_EQ(recs[0].timestamp, 0.5);
    EXPECT_DOUBLE_EQ(d.box.cx, 1);
    EXPECT_DOUBLE_EQ(d.box.h, 1.5);
    EXPECT_DOUBLE_EQ(d.box.w, 2);
    EXPECT_DOUBLE_EQ(d.box.cz, 0.5);
    EXPECT_DOUBLE_EQ(d.box.l, 4);
    EXPECT_DOUBLE_EQ(d.box.vx, 3);
    EXPECT_EQ(d.cls, "car");
    EXPECT_FALSE(d.track_id.has_value());
    EXPECT_FALSE(d.roi_feature.has_value());
}

TEST(Records, RoundTrip) {
    FrameRecord r{"seq", 1.25, std::nullopt, {}};
    ObjectRecord o;
    o.box = BoxState::from_yaw(1.1, -2.2, 0.7, 1.9, 4.4, 1.6, 0.3, 1.5, -0.5);
    o.cls = "car";
    o.score = 0.123456789;
    o.roi_feature = std::vector<double>{0.1, -0.2, 0.3};
    o.query_feature = std::vector<double>{1.0 / 3.0};
    o.track_id = 42;
    r.detections.push_back(o);
    std::array<double, 16> pose{};
    pose[0] = pose[5] = pose[10] = pose[15] = 1.0;
    r.ego_pose = pose;
    const auto back = parse(dump_records({r, FrameRecord{"seq", 2.0, std::nullopt, {}}}));
    ASSERT_EQ(back.size(), 2u);
    const auto& b = back[0].detections.at(0);
    EXPECT_EQ(b.box, o.box);
    EXPECT_EQ(b.score, o.score);
    EXPECT_EQ(b.roi_feature, o.roi_feature);
    EXPECT_EQ(b.query_feature, o.query_feature);
    EXPECT_EQ(b.track_id, o.track_id);
    EXPECT_EQ(back[0].ego_pose, r.ego_pose);
    EXPECT_TRUE(back[1].detections.empty());
}

TEST(Records, ErrorsNameFieldAndLine) {
    const std::string bad_box =
        R"({"sequence_id":"s","timestamp":1.0,"detections":[{"box":[1,2,1.5,2,0.5,4,1,0,3],"class":"car","score":0.8}]})";
    const auto err = parse_error(std::string(kRecord) + "\n" + bad_box);
    EXPECT_EQ(err.rfind("2|", 0), 0u) << err;
    EXPECT_NE(err.find("detections[0].box"), std::string::npos) << err;

    EXPECT_EQ(parse_error("{not json").rfind("1|", 0), 0u);
    EXPECT_NE(parse_error(R"({"sequence_id":"s","timestamp":1,"detections":[{"box":[1,2,1.5,2,0.5,4,1,0,3,0],"class":"car","score":1.5}]})")
                  .find("detections[0].score"),
              std::string::npos);
    EXPECT_NE(parse_error(R"({"sequence_id":"s","timestamp":1,"detections":[{"box":[1,2,-1,2,0.5,4,1,0,3,0],"class":"car","score":0.5}]})")
                  .find("detections[0].box"),
              std::string::npos);
    EXPECT_NE(parse_error(kRecord, true).find("track_id"), std::string::npos);
    EXPECT_NE(parse_error(R"({"timestamp":1,"detections":[]})").find("sequence_id"), std::string::npos);
}

TEST(Records, TimestampsMustIncreasePerSequence) {
    const std::string a = R"({"sequence_id":"a","timestamp":1,"detections":[]})";
    const std::string b = R"({"sequence_id":"b","timestamp":0.5,"detections":[]})";
    EXPECT_EQ(parse(a + "\n" + b).size(), 2u);
    const auto err = parse_error(a + "\n" + b + "\n" + a);
    EXPECT_EQ(err.rfind("3|", 0), 0u) << err;
    EXPECT_NE(err.find("timestamp"), std::string::npos);
}

TEST(Records, EgoPoseToWorld) {
    FrameRecord r{"s", 0.0, std::nullopt, {}};
    ObjectRecord o;
    o.box = BoxState::from_yaw(1, 0, 0.5, 2, 4, 1.5, 0.0, 1.0, 0.0);
    r.detections.push_back(o);
    // quarter turn about z, then shift by (10, 20, 0)
    r.ego_pose = std::array<double, 16>{0, -1, 0, 10, 1, 0, 0, 20, 0, 0, 1, 0, 0, 0, 0, 1};
    const auto w = to_world(r);
    const auto& b = w.detections[0].box;
    EXPECT_NEAR(b.cx, 10, 1e-12);
    EXPECT_NEAR(b.cy, 21, 1e-12);
    EXPECT_NEAR(b.cz, 0.5, 1e-12);
    EXPECT_NEAR(b.yaw(), std::numbers::pi / 2, 1e-12);
    EXPECT_NEAR(b.vx, 0, 1e-12);
    EXPECT_NEAR(b.vy, 1, 1e-12);
    EXPECT_FALSE(w.ego_pose.has_value());
}

TEST(Records, AtomicWriteNeedsDirectory) {
    const auto dir = std::filesystem::temp_directory_path() / "mvtrack_io_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "out.jsonl").string();
    write_records(path, parse(kRecord));
    EXPECT_EQ(load_records(path).size(), 1u);
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    EXPECT_THROW(write_records((dir / "missing" / "x.jsonl").string(), {}), InvalidInput);
    std::filesystem::remove_all(dir);
}

TEST(Config, ParsesOverDefaults) {
    std::istringstream is(R"(# tracker settings
p_detect = 0.8   # lower
max_hypotheses = 20
use_query_feature = false
process_noise = [0.1, 0.1, 0.02, 0.03, 2, 2]
)");
    const auto cfg = parse_config(is);
    EXPECT_DOUBLE_EQ(cfg.p_detect, 0.8);
    EXPECT_EQ(cfg.max_hypotheses, 20u);
    EXPECT_FALSE(cfg.use_query_feature);
    EXPECT_DOUBLE_EQ(cfg.process_noise[4], 2.0);
    EXPECT_DOUBLE_EQ(cfg.p_survive, tracking::TrackerConfig{}.p_survive);

    std::istringstream unlimited("max_hypotheses = \"unlimited\"\n");
    EXPECT_EQ(parse_config(unlimited).max_hypotheses, tracking::kUnlimitedHypotheses);
}

TEST(Config, RejectsBadInput) {
    auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream is(text);
        try {
            (void)parse_config(is);
        } catch (const ParseError& e) {
            return e.line();
        } catch (const InvalidInput&) {
            return 999;
        }
        return 0;
    };
    EXPECT_EQ(line_of("p_detect = 0.9\nalpha = 1\n"), 2u);
    EXPECT_EQ(line_of("p_detect = 0.9\np_detect = 0.8\n"), 2u);
    EXPECT_EQ(line_of("p_detect\n"), 1u);
    EXPECT_EQ(line_of("p_detect = abc\n"), 1u);
    EXPECT_EQ(line_of("process_noise = [1, 2]\n"), 1u);
    EXPECT_EQ(line_of("p_detect = 1.5\n"), 999u);
}

TEST(Config, FormatRoundTrips) {
    tracking::TrackerConfig cfg;
    cfg.p_detect = 0.87654321;
    cfg.roi_weight = 1.0 / 3.0;
    cfg.max_hypotheses = tracking::kUnlimitedHypotheses;
    cfg.measurement_noise[2] = 0.123456789012345;
    cfg.use_roi_feature = false;
    cfg.de_max_age = 5;
    std::istringstream is(format_config(cfg));
    const auto back = parse_config(is);
    EXPECT_EQ(back.p_detect, cfg.p_detect);
    EXPECT_EQ(back.roi_weight, cfg.roi_weight);
    EXPECT_EQ(back.max_hypotheses, cfg.max_hypotheses);
    EXPECT_EQ(back.measurement_noise, cfg.measurement_noise);
    EXPECT_EQ(back.use_roi_feature, cfg.use_roi_feature);
    EXPECT_EQ(back.de_max_age, cfg.de_max_age);
    EXPECT_EQ(format_config(back), format_config(cfg));
    EXPECT_EQ(config_keys().size(), 24u);
}

TEST(Rig, JsonRoundTripAndValidation) {
    const auto rig = geometry::synthetic_rig();
    const auto back = parse_rig(rig_to_json(rig));
    ASSERT_EQ(back.size(), rig.size());
    for (std::size_t i = 0; i < rig.size(); ++i) {
        EXPECT_EQ(back[i].name, rig[i].name);
        EXPECT_TRUE(back[i].extrinsic.isApprox(rig[i].extrinsic, 1e-15));
        EXPECT_EQ(back[i].intrinsic, rig[i].intrinsic);
    }
    auto j = rig_to_json(rig);
    j[2]["extrinsic"][0] = 2.0;
    try {
        (void)parse_rig(j);
        FAIL() << "expected rejection";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find(rig[2].name), std::string::npos);
    }
}

TEST(Scenario, ZeroNoiseDetectionsEqualTruth) {
    ScenarioSpec spec;
    spec.position_sigma = spec.yaw_sigma = spec.velocity_sigma = 0.0;
    spec.duration = 5;
    const auto sc = generate_scenario(spec, 3);
    ASSERT_EQ(sc.ground_truth.size(), 10u);
    for (std::size_t f = 0; f < sc.ground_truth.size(); ++f) {
        ASSERT_EQ(sc.detections[f].detections.size(), sc.ground_truth[f].detections.size());
        for (std::size_t i = 0; i < sc.ground_truth[f].detections.size(); ++i) {
            EXPECT_EQ(sc.detections[f].detections[i].box, sc.ground_truth[f].detections[i].box);
            EXPECT_EQ(sc.ground_truth[f].detections[i].track_id, static_cast<std::int64_t>(i));
        }
    }
}

TEST(Scenario, FullDropoutGivesEmptyFrames) {
    ScenarioSpec spec;
    spec.dropout = 1.0;
    spec.duration = 3;
    const auto sc = generate_scenario(spec, 4);
    for (const auto& f : sc.detections) EXPECT_TRUE(f.detections.empty());
    for (const auto& f : sc.ground_truth) EXPECT_EQ(f.detections.size(), 8u);
}

TEST(Scenario, SeedDeterminism) {
    ScenarioSpec spec;
    spec.clutter_rate = 2.0;
    spec.dropout = 0.3;
    spec.duration = 5;
    EXPECT_EQ(dump_records(generate_scenario(spec, 9).detections), dump_records(generate_scenario(spec, 9).detections));
    EXPECT_NE(dump_records(generate_scenario(spec, 9).detections),
              dump_records(generate_scenario(spec, 10).detections));
}

TEST(Scenario, EmbeddingsAreUnitAndIdentityCorrelated) {
    ScenarioSpec spec;
    spec.duration = 2;
    const auto sc = generate_scenario(spec, 5);
    const auto& a = sc.detections[0].detections;
    const auto& b = sc.detections[1].detections;
    ASSERT_EQ(a.size(), 8u);
    auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); };
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(vec(*a[i].roi_feature).norm(), 1.0, 1e-12);
        EXPECT_GT(vec(*a[i].roi_feature).dot(vec(*b[i].roi_feature)), 0.8);
        EXPECT_LT(std::abs(vec(*a[i].roi_feature).dot(vec(*b[(i + 1) % 8].roi_feature))), 0.6);
    }
}

TEST(Scenario, SpecParsing) {
    const auto spec = parse_scenario_spec(Json::parse(R"({"num_objects": 3, "dropout": 0.3})"));
    EXPECT_EQ(spec.num_objects, 3);
    EXPECT_DOUBLE_EQ(spec.dropout, 0.3);
    EXPECT_THROW((void)parse_scenario_spec(Json::parse(R"({"objects": 3})")), InvalidInput);
    EXPECT_THROW((void)parse_scenario_spec(Json::parse(R"({"dropout": 2})")), InvalidInput);
    EXPECT_THROW((void)parse_scenario_spec(Json::parse(R"({"num_objects": 2.5})")), InvalidInput);
}

TEST(Pipeline, ReportJsonRoundTrip) {
    metrics::FullReport r;
    r.summary.mota = 0.75;
    r.summary.motp = 0.3;
    r.summary.id_switches = 3;
    r.summary.gt_count = 40;
    r.summary.amota = 0.6;
    r.per_class["car"].amota = 0.6;
    r.per_class["car"].amotp = 0.4;
    const auto back = report_from_json(Json::parse(report_to_json(r).dump(2)));
    EXPECT_EQ(back.summary.mota, 0.75);
    EXPECT_EQ(back.summary.id_switches, 3);
    EXPECT_EQ(back.summary.gt_count, 40);
    EXPECT_EQ(back.per_class.at("car").amotp, 0.4);
    EXPECT_THROW((void)report_from_json(Json::parse(R"({"mota": 1})")), InvalidInput);
}

TEST(Pipeline, TrackingZeroNoiseScenarioIsPerfect) {
    ScenarioSpec spec;
    spec.position_sigma = spec.yaw_sigma = spec.velocity_sigma = 0.0;
    spec.num_objects = 4;
    spec.turning_fraction = 0.0;
    spec.duration = 10;
    const auto sc = generate_scenario(spec, 6);
    for (auto mode : {tracking::AssociationMode::Deterministic, tracking::AssociationMode::ProbabilisticHybrid}) {
        RunSummary s;
        const auto tracks = track_records(sc.detections, {}, mode, &s);
        ASSERT_EQ(tracks.size(), sc.detections.size());
        EXPECT_EQ(s.frames, sc.detections.size());
        const auto rep = evaluate_records(tracks, sc.ground_truth);
        EXPECT_EQ(rep.summary.id_switches, 0) << tracking::to_string(mode);
        EXPECT_GT(rep.summary.mota, 0.95) << tracking::to_string(mode);
    }
}

TEST(Pipeline, EvalPairsFramesByTimestamp) {
    FrameRecord gt{"s", 1.0, std::nullopt, {}};
    ObjectRecord o;
    o.box = BoxState::from_yaw(0, 0, 0, 2, 4, 1.5, 0);
    o.cls = "car";
    o.track_id = 1;
    gt.detections.push_back(o);
    FrameRecord gt2 = gt;
    gt2.timestamp = 2.0;
    FrameRecord trk = gt;
    trk.detections[0].track_id = 9;
    const auto seqs = build_eval_sequences({trk}, {gt, gt2});
    ASSERT_EQ(seqs.size(), 1u);
    ASSERT_EQ(seqs[0].size(), 2u);
    EXPECT_EQ(seqs[0][0].tracks.size(), 1u);
    EXPECT_TRUE(seqs[0][1].tracks.empty());
    const auto rep = evaluate_records({trk}, {gt, gt2});
    EXPECT_DOUBLE_EQ(rep.summary.mota, 0.5);
}

TEST(Selfcheck, PassesOnSyntheticRig) {
    const auto report = run_geometry_selfcheck(geometry::synthetic_rig(), 1, 300);
    EXPECT_TRUE(report.passed()) << report.to_text();
}
