#include "doctest.h"

#include "bwf/domain.hpp"
#include "bwf/error.hpp"

using namespace bwf;
using namespace bwf::domain;

namespace {

MunicipalityState muni(const std::string& id, double pop, double len, double age)
{
    MunicipalityState m;
    m.data.id = id;
    m.data.province = "P";
    m.data.population = pop;
    m.data.houses = pop / 2;
    m.data.dist_net_length = len;
    m.data.dist_net_avg_age = age;
    m.open = true;
    m.members.push_back({id, pop, pop / 2, 0});
    return m;
}

ConnectionState pipe(const std::string& id, const std::string& a, const std::string& b)
{
    ConnectionState c{id, a, b, 1000.0, false, PipeState{"p", 2020, 0, 0.02, 0.0, 0.02, 0.5}, std::nullopt};
    return c;
}

// Four municipalities A-B-C-D in a line plus A-C.
WorldState four_nodes()
{
    WorldState st;
    st.clock = Date::jan1(2030);
    st.municipalities = {muni("A", 1000, 10, 20), muni("B", 2000, 30, 60), muni("C", 500, 5, 10), muni("D", 700, 7, 30)};
    st.connections = {pipe("AB", "A", "B"), pipe("BC", "B", "C"), pipe("CD", "C", "D"), pipe("AC", "A", "C")};
    return st;
}

}  // namespace

TEST_CASE("absorb conserves population and hides the shared pipe")
{
    auto st = four_nodes();
    const double before = st.open_population();
    const auto edges_before = visible_network(st, Date::jan1(2030)).edges.size();
    apply_lifecycle_event(st, {LifecycleEvent::Kind::Absorb, {"A"}, "B"}, Date::jan1(2030));
    CHECK(st.municipality("B")->data.population == 3000.0);
    CHECK_FALSE(st.municipality("A")->open);
    CHECK(st.open_population() == before);
    // length-weighted age: (60*30 + 20*10) / 40
    CHECK(st.municipality("B")->data.dist_net_avg_age == 50.0);
    auto view = visible_network(st, Date::jan1(2030));
    CHECK(view.edges.size() < edges_before);
    for (const auto& e : view.edges) {
        CHECK(e.id != "AB");
        CHECK(e.a != "A");
        CHECK(e.b != "A");
    }
    // A-C now runs from B
    CHECK(st.connection("AC")->node_a == "B");
    for (const auto& n : view.nodes)
        CHECK(n.id != "A");
}

TEST_CASE("cluster inherits external connections")
{
    WorldState st;
    st.municipalities = {muni("A", 100, 1, 10), muni("B", 200, 1, 20), muni("C", 50, 1, 0), muni("D", 70, 1, 0)};
    MunicipalityState m;
    m.data.id = "M";
    m.data.latitude = 52.1;
    st.municipalities.push_back(m);
    st.connections = {pipe("AC", "A", "C"), pipe("BD", "B", "D"), pipe("AB", "A", "B")};
    apply_lifecycle_event(st, {LifecycleEvent::Kind::Cluster, {"A", "B"}, "M"}, Date::jan1(2031));
    CHECK(st.municipality("M")->open);
    CHECK(st.municipality("M")->data.population == 300.0);
    CHECK(st.municipality("M")->data.latitude == 52.1);
    CHECK(st.municipality("M")->members.size() == 2);
    auto view = visible_network(st, Date::jan1(2031));
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& e : view.edges)
        got.insert({e.a, e.b});
    CHECK(got == std::set<std::pair<std::string, std::string>>{{"M", "C"}, {"M", "D"}});
}

TEST_CASE("lifecycle errors")
{
    auto st = four_nodes();
    CHECK_THROWS_AS(apply_lifecycle_event(st, {LifecycleEvent::Kind::Absorb, {"A"}, "B"}, Date{2030, 4, 1}), DateError);
    apply_lifecycle_event(st, {LifecycleEvent::Kind::Absorb, {"A"}, "B"}, Date::jan1(2030));
    CHECK_THROWS_AS(apply_lifecycle_event(st, {LifecycleEvent::Kind::Absorb, {"A"}, "C"}, Date::jan1(2031)),
                    LifecycleError);
    // chained change of B on the same date
    CHECK_THROWS_AS(apply_lifecycle_event(st, {LifecycleEvent::Kind::Absorb, {"B"}, "C"}, Date::jan1(2030)),
                    LifecycleError);
    CHECK_THROWS_AS(apply_lifecycle_event(st, {LifecycleEvent::Kind::Absorb, {"C"}, "A"}, Date::jan1(2031)),
                    LifecycleError);
}

TEST_CASE("visible network follows activation dates and closed nodes")
{
    auto st = four_nodes();
    SourceState s;
    s.data.id = "S";
    s.data.connected_municipality = "C";
    s.data.activation_date = Date::jan1(2032);
    s.data.station.id = "S-st";
    st.sources.push_back(s);
    auto before = visible_network(st, Date::jan1(2031));
    CHECK(before.nodes.size() == 4);
    auto after = visible_network(st, Date::jan1(2032));
    CHECK(after.nodes.size() == 5);
    CHECK(std::is_sorted(after.edges.begin(), after.edges.end(), [](auto& a, auto& b) { return a.id < b.id; }));
    for (const auto& e : after.edges) {
        bool a_ok = false, b_ok = false;
        for (const auto& n : after.nodes) {
            a_ok = a_ok || n.id == e.a;
            b_ok = b_ok || n.id == e.b;
        }
        CHECK(a_ok);
        CHECK(b_ok);
    }
    st.sources[0].closed = true;
    CHECK(visible_network(st, Date::jan1(2033)).nodes.size() == 4);
    CHECK(visible_network(WorldState{}, Date::jan1(2033)).nodes.empty());
}
