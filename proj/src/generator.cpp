#include "bwf/generator.hpp"

#include "bwf/error.hpp"
#include "bwf/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace bwf::generator {

using domain::Instance;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string padded(const char* prefix, int i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%02d", prefix, i);
    return buf;
}

double distance_m(double lat1, double lon1, double lat2, double lon2)
{
    const double r = 6371000.0;
    const double x = (lon2 - lon1) * kPi / 180.0 * std::cos((lat1 + lat2) / 2.0 * kPi / 180.0);
    const double y = (lat2 - lat1) * kPi / 180.0;
    return r * std::sqrt(x * x + y * y);
}

scenario::DriverSpec spec(std::string name, scenario::Scope scope, scenario::DriverKind kind, double start,
                          double growth, double lower, double upper, double volatility)
{
    scenario::DriverSpec d;
    d.name = std::move(name);
    d.scope = scope;
    d.kind = kind;
    d.start = start;
    d.growth = growth;
    d.lower = lower;
    d.upper = upper;
    d.volatility = volatility;
    return d;
}

}  // namespace

std::shared_ptr<const hydraulics::PumpCharacteristic> pump_curves(const std::string& id, double design_flow,
                                                                  double design_head)
{
    auto p = std::make_shared<hydraulics::PumpCharacteristic>();
    p->option_id = id;
    const double q = design_flow, h = design_head;
    p->head = TabulatedCurve({{0.0, 1.3 * h}, {0.5 * q, 1.2 * h}, {q, h}, {1.5 * q, 0.65 * h}, {2.0 * q, 0.15 * h}},
                             id + " head");
    p->efficiency = TabulatedCurve(
        {{0.0, 0.2}, {0.5 * q, 0.62}, {q, 0.78}, {1.5 * q, 0.7}, {2.0 * q, 0.45}}, id + " efficiency");
    return p;
}

domain::Catalogs default_catalogs()
{
    domain::Catalogs c;
    struct PumpRow {
        const char* id;
        double flow, head, cost, emissions;
    };
    for (const PumpRow& r : {PumpRow{"P300", 300.0, 70.0, 60000.0, 4.0}, PumpRow{"P600", 600.0, 75.0, 95000.0, 6.0},
                             PumpRow{"P1000", 1000.0, 80.0, 140000.0, 9.0}}) {
        assets::PumpOption o;
        o.id = r.id;
        o.curves = pump_curves(r.id, r.flow, r.head);
        o.unit_cost = r.cost;
        o.embedded_emissions = r.emissions;
        c.pumps[o.id] = o;
    }
    struct PipeRow {
        const char* id;
        double diameter;
        const char* material;
        double cost;
    };
    for (const PipeRow& r : {PipeRow{"D300", 0.3, "pvc", 180.0}, PipeRow{"D500", 0.5, "ductile_iron", 320.0},
                             PipeRow{"D800", 0.8, "ductile_iron", 560.0}, PipeRow{"D1000", 1.0, "steel", 750.0}}) {
        assets::PipeOption o;
        o.id = r.id;
        o.diameter = r.diameter;
        o.material = r.material;
        o.friction_new = 0.015;
        o.decay_min = 0.0001;
        o.decay_max = 0.0004;
        o.cost_per_m = r.cost;
        o.emissions_per_m = 0.25 * r.diameter;
        o.lifetime_years = 50.0;
        c.pipes[o.id] = o;
    }
    // type -> fixed, treatment kWh/m3, non-energy, multiplier, build cost, life, emissions
    const double base[3][7] = {{4.0e5, 0.25, 0.08, 1.5, 800.0, 40.0, 0.05},
                               {8.0e5, 0.40, 0.12, 1.5, 1200.0, 40.0, 0.08},
                               {1.6e6, 3.50, 0.30, 1.3, 2000.0, 30.0, 0.15}};
    const double fixed_scale[3] = {1.0, 1.6, 2.4};
    const double unit_scale[3] = {1.0, 0.9, 0.8};
    for (int t = 0; t < 3; ++t)
        for (int s = 0; s < 3; ++s) {
            auto& e = c.source_costs.entries[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
            e.fixed_per_year = base[t][0] * fixed_scale[s];
            e.energy_intensity = base[t][1];
            e.non_energy = base[t][2] * unit_scale[s];
            e.over_target_multiplier = base[t][3];
            e.construction_unit_cost = base[t][4] * unit_scale[s];
            e.lifetime_years = base[t][5];
            e.embedded_emissions = base[t][6];
        }
    return c;
}

std::vector<scenario::DriverSpec> default_drivers(double national_budget)
{
    using scenario::DriverKind;
    using scenario::Scope;
    std::vector<scenario::DriverSpec> d;
    d.push_back(spec("inflation", Scope::National, DriverKind::MeanReverting, 0.02, 0.0, 0.5, 1.0, 0.2));
    d.push_back(spec("electricity_price", Scope::National, DriverKind::BoundedWalk, 0.12, 0.01, 0.3, 0.5, 0.08));
    d.push_back(spec("grid_emission_factor", Scope::National, DriverKind::BoundedWalk, 0.35, -0.03, 0.2, 0.2, 0.05));
    d.push_back(spec("pv_unit_cost", Scope::National, DriverKind::BoundedWalk, 900.0, -0.02, 0.2, 0.2, 0.05));
    d.push_back(spec("max_temperature", Scope::National, DriverKind::MeanReverting, 30.0, 0.002, 0.1, 0.15, 0.03));
    d.push_back(spec("investor_demand", Scope::National, DriverKind::MeanReverting, 1.0, 0.0, 0.2, 0.2, 0.05));
    d.push_back(spec("national_budget", Scope::National, DriverKind::BoundedWalk, national_budget, 0.01, 0.2, 0.2, 0.04));
    d.push_back(spec("household_demand", Scope::National, DriverKind::Ar1Lognormal, 0.3, 0.0, 0.1, 0.1, 0.03));
    d.push_back(spec("business_demand", Scope::National, DriverKind::Ar1Lognormal, 1.2, 0.0, 0.1, 0.1, 0.03));
    d.push_back(spec("population", Scope::Municipality, DriverKind::BoundedWalk, 1.0, 0.004, 0.2, 0.2, 0.01));
    d.push_back(spec("income_index", Scope::Municipality, DriverKind::BoundedWalk, 1.0, 0.01, 0.2, 0.2, 0.02));
    d.push_back(spec("tariff_fixed", Scope::Utility, DriverKind::BoundedWalk, 8.0, 0.02, 0.1, 0.2, 0.02));
    d.push_back(spec("tariff_volumetric", Scope::Utility, DriverKind::BoundedWalk, 1.5, 0.02, 0.1, 0.2, 0.02));
    return d;
}

Instance generate_instance(const GeneratorOptions& o)
{
    if (o.municipalities < 2 || o.provinces < 1 || o.provinces > o.municipalities || o.sources < 1 || o.sites < 0)
        throw ConfigError("generator needs at least two municipalities, one province per utility and one source");
    RandomStream rng(derive_seed(o.seed, "generator", o.name, 0));
    Instance in;
    in.name = o.name;
    in.start_year = o.start_year;
    const Date start = Date::jan1(o.start_year);
    for (int p = 1; p <= o.provinces; ++p)
        in.utilities.push_back({padded("U", p), padded("PR", p)});

    const int n = o.municipalities;
    // spread over roughly 70 x 70 km, provinces as longitude bands
    for (int i = 0; i < n; ++i) {
        domain::Municipality m;
        m.id = padded("M", i + 1);
        m.name = "Town " + std::to_string(i + 1);
        m.latitude = 52.0 + 0.6 * rng.uniform();
        m.longitude = 5.0 + 1.0 * (i + rng.uniform()) / n;
        const int band = std::min(o.provinces - 1, i * o.provinces / n);
        m.province = padded("PR", band + 1);
        m.elevation = std::round(15.0 * rng.uniform() * 10.0) / 10.0;
        m.begin_date = Date::jan1(1990);
        m.population = std::round(std::exp(std::log(5000.0) + rng.uniform() * (std::log(150000.0) - std::log(5000.0))));
        m.houses = std::round(m.population / 2.3);
        m.businesses = std::round(m.population / 25.0);
        m.dist_net_length = std::round(nrw::km_pipes(m.population) * 10.0) / 10.0;
        m.dist_net_avg_age = std::round((10.0 + 55.0 * rng.uniform()) * 10.0) / 10.0;
        m.income_index = std::round((0.8 + 0.4 * rng.uniform()) * 1000.0) / 1000.0;
        m.surface_land = std::round(20.0 + 80.0 * rng.uniform());
        m.surface_water_inland = std::round(5.0 * rng.uniform() * 10.0) / 10.0;
        m.surface_water_open = 0.0;
        in.municipalities.push_back(m);
    }
    auto dist = [&](int a, int b) {
        const auto& x = in.municipalities[static_cast<std::size_t>(a)];
        const auto& y = in.municipalities[static_cast<std::size_t>(b)];
        return std::round(distance_m(x.latitude, x.longitude, y.latitude, y.longitude));
    };

    // spanning tree (piped) plus nearest-neighbour candidates
    std::set<std::pair<int, int>> edges, tree;
    std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
    in_tree[0] = true;
    for (int k = 1; k < n; ++k) {
        double best = std::numeric_limits<double>::infinity();
        std::pair<int, int> e{0, 0};
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (in_tree[static_cast<std::size_t>(a)] && !in_tree[static_cast<std::size_t>(b)] && dist(a, b) < best) {
                    best = dist(a, b);
                    e = {std::min(a, b), std::max(a, b)};
                }
        in_tree[static_cast<std::size_t>(e.first)] = in_tree[static_cast<std::size_t>(e.second)] = true;
        tree.insert(e);
        edges.insert(e);
    }
    for (int a = 0; a < n; ++a) {
        std::vector<int> others;
        for (int b = 0; b < n; ++b)
            if (b != a)
                others.push_back(b);
        std::sort(others.begin(), others.end(), [&](int x, int y) { return dist(a, x) < dist(a, y); });
        for (std::size_t k = 0; k < std::min<std::size_t>(2, others.size()); ++k)
            edges.insert({std::min(a, others[k]), std::max(a, others[k])});
    }
    for (const auto& [a, b] : edges) {
        domain::Connection c;
        const auto& ma = in.municipalities[static_cast<std::size_t>(a)];
        const auto& mb = in.municipalities[static_cast<std::size_t>(b)];
        c.id = "C-" + ma.id + "-" + mb.id;
        c.node_a = ma.id;
        c.node_b = mb.id;
        c.distance = dist(a, b);
        if (tree.count({a, b}))
            c.pipe = domain::InstalledPipe{"D800", Date::jan1(o.start_year - rng.uniform_int(0, 40))};
        in.connections.push_back(c);
    }

    in.catalogs = default_catalogs();
    double need = 0.0, pop = 0.0;
    for (const auto& m : in.municipalities) {
        need += 0.3 * m.houses + 1.2 * m.businesses + 25.0 * nrw::km_pipes(m.population);
        pop += m.population;
    }
    std::vector<int> by_pop(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        by_pop[static_cast<std::size_t>(i)] = i;
    std::stable_sort(by_pop.begin(), by_pop.end(), [&](int a, int b) {
        return in.municipalities[static_cast<std::size_t>(a)].population >
               in.municipalities[static_cast<std::size_t>(b)].population;
    });
    const double nominal = std::round(1.4 * need / o.sources / 100.0) * 100.0;
    for (int k = 0; k < o.sources; ++k) {
        const auto& m = in.municipalities[static_cast<std::size_t>(by_pop[static_cast<std::size_t>(k % n)])];
        domain::WaterSource s;
        s.id = padded("W", k + 1);
        s.type = (o.sources >= 2 && k == o.sources - 1) ? assets::SourceType::Surface : assets::SourceType::Groundwater;
        s.latitude = m.latitude + 0.01;
        s.longitude = m.longitude - 0.01;
        s.elevation = std::round(5.0 * rng.uniform() * 10.0) / 10.0;
        s.province = m.province;
        s.connected_municipality = m.id;
        s.activation_date = Date::jan1(1990);
        s.nominal_capacity = nominal;
        s.target_factor = 0.8;
        if (s.type == assets::SourceType::Groundwater)
            s.permit = std::round(nominal * 365.0 * 0.9);
        else
            s.max_capacity = std::round(nominal * 1.5);
        s.station.id = s.id + "-ps";
        s.station.pump_option = "P600";
        s.station.pump_count = std::max(2, static_cast<int>(std::ceil(nominal / 24.0 * 1.6 / 600.0)));
        for (int u = 0; u < s.station.pump_count; ++u)
            s.station.pump_install_years.push_back(o.start_year - rng.uniform_int(0, 12));
        in.sources.push_back(s);
    }
    for (int k = 0; k < o.sites; ++k) {
        const auto& m = in.municipalities[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
        domain::Site s;
        s.id = padded("S", k + 1);
        s.type = static_cast<assets::SourceType>(k % 3);
        s.latitude = m.latitude - 0.01;
        s.longitude = m.longitude + 0.01;
        s.elevation = std::round(5.0 * rng.uniform() * 10.0) / 10.0;
        s.province = m.province;
        s.connected_municipality = m.id;
        if (s.type == assets::SourceType::Groundwater)
            s.permit = std::round(nominal * 365.0 * 0.5);
        else
            s.max_capacity = std::round(nominal * 0.8);
        in.sites.push_back(s);
    }

    if (o.lifecycle && n >= 6) {
        // smallest municipality joins its nearest same-province neighbour
        const int small = by_pop.back();
        int target = -1;
        for (int b = 0; b < n; ++b)
            if (b != small && in.municipalities[static_cast<std::size_t>(b)].province ==
                                  in.municipalities[static_cast<std::size_t>(small)].province &&
                (target < 0 || dist(small, b) < dist(small, target)))
                target = b;
        if (target >= 0) {
            auto& m = in.municipalities[static_cast<std::size_t>(small)];
            m.end_date = start.plus_years(3);
            m.end = domain::EndDisposition{domain::Disposition::Absorbed,
                                           in.municipalities[static_cast<std::size_t>(target)].id};
        }
        // a piped same-province pair of other towns forms a new one
        for (const auto& c : in.connections) {
            auto* a = const_cast<domain::Municipality*>(in.find_municipality(c.node_a));
            auto* b = const_cast<domain::Municipality*>(in.find_municipality(c.node_b));
            if (a->end_date || b->end_date || a->province != b->province)
                continue;
            if (target >= 0 && (a->id == in.municipalities[static_cast<std::size_t>(target)].id ||
                                b->id == in.municipalities[static_cast<std::size_t>(target)].id))
                continue;
            domain::Municipality nm;
            nm.id = padded("M", n + 1);
            nm.name = a->name + "-" + b->name;
            nm.latitude = (a->latitude + b->latitude) / 2.0;
            nm.longitude = (a->longitude + b->longitude) / 2.0;
            nm.elevation = std::min(a->elevation, b->elevation);
            nm.province = a->province;
            nm.begin_date = start.plus_years(6);
            nm.income_index = 1.0;
            for (auto* m : {a, b}) {
                m->end_date = start.plus_years(6);
                m->end = domain::EndDisposition{domain::Disposition::Clustered, nm.id};
            }
            in.municipalities.push_back(nm);
            break;
        }
    }

    in.economy = {};
    in.nrw.table = {};
    const double unit[5] = {0.0, 2000.0, 3000.0, 4500.0, 6000.0};
    const double size_scale[3] = {1.1, 1.0, 0.9};
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t s = 0; s < 3; ++s) {
            in.nrw.costs.unit_cost[c][s] = unit[c] * size_scale[s];
            in.nrw.costs.effectiveness[c][s] = 1.0 / 400.0;
        }
    in.household_classes = {{"low", 0.3, 0.6, 2.6}, {"middle", 0.5, 1.0, 2.3}, {"high", 0.2, 1.6, 1.9}};
    for (int h = 0; h < 24; ++h)
        in.energy.price_shape.factor[static_cast<std::size_t>(h)] = (h < 7 || h == 23) ? 0.8 : 1.1;
    in.energy.pv_embedded_per_kw = 1.2;
    in.drivers = default_drivers(std::round(50.0 * pop));
    in.permit_fines.bands = {{0.1, 0.5}, {0.3, 1.0}, {0.0, 2.0}};
    return in;
}

}  // namespace bwf::generator
