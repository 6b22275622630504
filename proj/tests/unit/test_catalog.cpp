#include "doctest.h"

#include "tapsynth/catalog.hpp"
#include "tapsynth/error.hpp"
#include "test_support.hpp"

using namespace tapsynth;
using namespace tstest;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Ok;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const char* kMinimal = R"({
  "triggers": [{"id": "t1", "function_name": "Fires", "channel": "C", "category": "X",
                "description": "d", "fields": [], "ingredients": [{"slug": "Name", "data_type": "String"}]}],
  "actions": [{"id": "a1", "function_name": "Does", "channel": "C", "category": "X",
               "description": "d", "fields": [{"label": "Name", "slug": "name", "required": true, "data_type": "String"}]}]
})";

}  // namespace

TEST_CASE("table 4 trigger parses with nine ingredients and one field") {
    std::vector<std::string> warnings;
    const Catalog c = load_catalog(source_path("data/catalogs/table4.json"), &warnings);
    CHECK(warnings.empty());
    const auto& t = c.lookup("nyt.new_article_from_search", FunctionKind::Trigger);
    CHECK(t.ingredients.size() == 9);
    CHECK(t.fields.size() == 1);
    CHECK(t.fields[0].label == "Search for");
    CHECK(t.fields[0].required);
    CHECK(t.ingredients[8].slug == "PublishedDate");
    CHECK(t.ingredients[8].data_type.tag == DataType::Tag::DateWithTime);

    const auto& a = c.lookup("evernote.append_to_note", FunctionKind::Action);
    REQUIRE(a.fields.size() == 4);
    CHECK(a.fields[0].required);
    CHECK(a.fields[1].required);
    CHECK_FALSE(a.fields[2].required);
    CHECK_FALSE(a.fields[3].required);
    CHECK(a.ingredients.empty());
    CHECK(c.size() == 2);
}

TEST_CASE("render_text of the table 4 trigger") {
    const Catalog c = load_catalog(source_path("data/catalogs/table4.json"));
    const std::string text = render_text(c.lookup("nyt.new_article_from_search"));
    CHECK(text.rfind("[The New York Times] [News & information] New article from search.", 0) == 0);
    CHECK(text.find("Provides: Title (String), Author (String)") != std::string::npos);
    CHECK(text.find("PublishedDate (Date with time)") != std::string::npos);
    CHECK(text.find("Search for") == std::string::npos);
}

TEST_CASE("render_text with empty schema ends at the marker") {
    const auto t = trigger("x.t", {});
    CHECK(render_text(t).size() >= 10);
    const std::string text = render_text(t);
    CHECK(text.substr(text.size() - 10) == "Provides: ");
    const auto a = action("x.a", {});
    const std::string at = render_text(a);
    CHECK(at.substr(at.size() - 10) == "Requires: ");
}

TEST_CASE("render_text marks action fields required or optional") {
    auto a = action("x.a", {field("to", true), field("cc", false)});
    a.fields[0].label = "To";
    a.fields[1].label = "Cc";
    const std::string text = render_text(a);
    CHECK(text.find("Requires: To (required), Cc (optional)") != std::string::npos);
}

TEST_CASE("parse errors") {
    SUBCASE("syntax error carries line and column") {
        const std::string doc = "{\n  \"triggers\": [\n    {\"id\": }\n  ]\n}";
        const auto msg = message_of([&] { parse_catalog(doc); });
        CHECK(code_of([&] { parse_catalog(doc); }) == ErrorCode::Parse);
        CHECK(msg.find("line 3") != std::string::npos);
    }
    SUBCASE("missing key names the path") {
        std::string doc = kMinimal;
        doc.replace(doc.find("\"channel\": \"C\","), 15, "");
        const auto msg = message_of([&] { parse_catalog(doc); });
        CHECK(msg.find("triggers[0].channel") != std::string::npos);
    }
    SUBCASE("duplicate id across kinds") {
        std::string doc = kMinimal;
        doc.replace(doc.find("\"id\": \"a1\""), 10, "\"id\": \"t1\"");
        CHECK(code_of([&] { parse_catalog(doc); }) == ErrorCode::DuplicateId);
    }
    SUBCASE("action carrying ingredients") {
        std::string doc = kMinimal;
        const auto pos = doc.find("\"fields\": [{\"label\"");
        doc.insert(pos, "\"ingredients\": [{\"slug\": \"x\", \"data_type\": \"String\"}], ");
        CHECK(code_of([&] { parse_catalog(doc); }) == ErrorCode::Parse);
        CHECK(message_of([&] { parse_catalog(doc); }).find("carries ingredients") != std::string::npos);
    }
    SUBCASE("empty sides") {
        const std::string no_actions =
            R"({"triggers": [{"id": "t1", "function_name": "f", "channel": "c", "category": "x", "description": "d"}], "actions": []})";
        CHECK(message_of([&] { parse_catalog(no_actions); }).find("empty action catalog") != std::string::npos);
        CHECK(code_of([&] { parse_catalog(R"({"triggers": [], "actions": []})"); }) == ErrorCode::InvalidArgument);
        CHECK(code_of([&] { parse_catalog(""); }) == ErrorCode::Parse);
    }
    SUBCASE("undeclared category") {
        std::string doc = kMinimal;
        doc.insert(1, "\"categories\": [\"Y\"],");
        CHECK(code_of([&] { parse_catalog(doc); }) == ErrorCode::Parse);
    }
    SUBCASE("required must be boolean") {
        std::string doc = kMinimal;
        doc.replace(doc.find("\"required\": true"), 16, "\"required\": \"yes\"");
        CHECK(code_of([&] { parse_catalog(doc); }) == ErrorCode::Parse);
    }
    SUBCASE("missing file") {
        CHECK(code_of([] { load_catalog("/nonexistent/catalog.json"); }) == ErrorCode::Io);
    }
}

TEST_CASE("unknown data types become Other with a warning") {
    std::string doc = kMinimal;
    doc.replace(doc.find("\"data_type\": \"String\""), 21, "\"data_type\": \"Location\"");
    std::vector<std::string> warnings;
    const Catalog c = parse_catalog(doc, &warnings);
    const auto& t = c.lookup("t1");
    CHECK(t.ingredients[0].data_type.tag == DataType::Tag::Other);
    CHECK(t.ingredients[0].data_type.to_string() == "Location");
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("Location") != std::string::npos);
}

TEST_CASE("categories are derived when not declared") {
    const Catalog c = parse_catalog(kMinimal);
    CHECK(c.categories() == std::set<std::string>{"X"});
}

TEST_CASE("lookup errors") {
    const Catalog c = parse_catalog(kMinimal);
    CHECK(code_of([&] { c.lookup("missing"); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { c.lookup("t1", FunctionKind::Action); }) == ErrorCode::KindMismatch);
    CHECK(c.find("a1") != nullptr);
    CHECK(c.find("zzz") == nullptr);
}

TEST_CASE("programmatic catalog validation") {
    CHECK(code_of([] { make_catalog({trigger("t", {ingredient("a"), ingredient("a")})}, {}); }) ==
          ErrorCode::DuplicateId);
    CHECK(code_of([] { make_catalog({}, {action("a", {field("x"), field("x")})}); }) == ErrorCode::DuplicateId);
    auto bad = action("a");
    bad.ingredients.push_back(ingredient("x"));
    CHECK(code_of([&] { make_catalog({}, {bad}); }) == ErrorCode::Parse);
    auto wrong_kind = trigger("t");
    CHECK(code_of([&] { make_catalog({}, {wrong_kind}); }) == ErrorCode::KindMismatch);
}

TEST_CASE("data type names round trip") {
    for (auto name : {"String", "Number", "Boolean", "Date", "Date with time", "Url", "Image url"}) {
        bool known = false;
        const auto t = DataType::parse(name, &known);
        CHECK(known);
        CHECK(t.to_string() == name);
    }
}

TEST_CASE("synthetic catalog loads") {
    std::vector<std::string> warnings;
    const Catalog c = load_catalog(source_path("data/catalogs/synthetic.json"), &warnings);
    CHECK(warnings.empty());
    CHECK(c.triggers().size() == 50);
    CHECK(c.actions().size() == 39);
    const auto& light = c.lookup("philips_hue.turn_on_change_light_mode", FunctionKind::Action);
    REQUIRE(light.fields.size() == 2);
    CHECK(light.fields[0].slug == "color");
    CHECK(light.fields[1].slug == "light");
}

TEST_CASE("property: serialize then parse is the identity") {
    Rng rng(7);
    for (int round = 0; round < 200; ++round) {
        std::vector<FunctionEntry> ts, as;
        const int nt = rng.uniform(1, 8), na = rng.uniform(1, 8);
        for (int i = 0; i < nt; ++i) {
            auto t = random_trigger(rng, pad_id("t", i));
            if (rng.coin()) t.fields.push_back(field("query", rng.coin()));
            if (!t.ingredients.empty() && rng.coin()) t.ingredients[0].example = "ex \"quoted\" é";
            ts.push_back(std::move(t));
        }
        for (int i = 0; i < na; ++i) {
            auto a = random_action(rng, pad_id("a", i));
            if (!a.fields.empty() && rng.coin()) a.fields[0].helper_text = "help";
            if (!a.fields.empty() && rng.coin()) a.fields[0].data_type = DataType::parse("Gizmo");
            as.push_back(std::move(a));
        }
        const Catalog c = make_catalog(ts, as);
        const std::string doc = serialize_catalog(c);
        const Catalog back = parse_catalog(doc);
        REQUIRE(back == c);
        CHECK(serialize_catalog(back) == doc);
    }
}

TEST_CASE("property: render_text separates entries that differ in embedded content") {
    Rng rng(11);
    for (int round = 0; round < 300; ++round) {
        auto a = random_trigger(rng, "t.x");
        auto b = a;
        switch (rng.uniform(0, 3)) {
            case 0: b.function_name += " now"; break;
            case 1: b.description += " Also."; break;
            case 2: b.ingredients.push_back(ingredient("extra_slug")); break;
            default: b.category = a.category + "2"; break;
        }
        CHECK(render_text(a) != render_text(b));
        CHECK(render_text(a) == render_text(a));
    }
}
