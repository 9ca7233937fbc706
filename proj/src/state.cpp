#include "mhr/state.hpp"

#include <cstring>
#include <sstream>

#include "json.hpp"

namespace mhr {

// ---- Universe ---------------------------------------------------------------

Universe::Universe(std::uint32_t people, std::uint32_t operators, std::uint32_t spaces,
                   std::uint32_t records, std::uint32_t providers)
    : people_(people), operators_(operators), spaces_(spaces), records_(records),
      providers_(providers) {
    if (people_ + operators_ == 0 || spaces_ == 0)
        throw std::invalid_argument("universe needs at least one person and one record space");
    constexpr std::uint32_t kMax = 1u << 20;
    if (people_ + operators_ > kMax || spaces_ > kMax || records_ > kMax || providers_ > kMax)
        throw std::invalid_argument("universe size out of range");
}

Id Universe::person(std::uint32_t i) const {
    if (i >= total_people()) throw std::out_of_range("person index");
    return Id(IdKind::Person, i);
}

Id Universe::space(std::uint32_t i) const {
    if (i >= spaces_) throw std::out_of_range("space index");
    return Id(IdKind::Space, i);
}

Id Universe::record(std::uint32_t i) const {
    if (i >= records_) throw std::out_of_range("record index");
    return Id(IdKind::Record, i);
}

Id Universe::provider(std::uint32_t i) const {
    if (i >= providers_) throw std::out_of_range("provider index");
    return Id(IdKind::Provider, i);
}

namespace {

IdSet id_range(IdKind kind, std::uint32_t from, std::uint32_t to) {
    std::vector<Id> ids;
    ids.reserve(to - from);
    for (std::uint32_t i = from; i < to; ++i) ids.push_back(Id(kind, i));
    return IdSet(std::move(ids));
}

} // namespace

IdSet Universe::people() const { return id_range(IdKind::Person, 0, total_people()); }
IdSet Universe::operator_people() const {
    return id_range(IdKind::Person, people_, total_people());
}
IdSet Universe::spaces() const { return id_range(IdKind::Space, 0, spaces_); }
IdSet Universe::records() const { return id_range(IdKind::Record, 0, records_); }
IdSet Universe::providers() const { return id_range(IdKind::Provider, 0, providers_); }

bool Universe::contains(Id id) const {
    switch (id.kind()) {
        case IdKind::Person: return id.index() < total_people();
        case IdKind::Space: return id.index() < spaces_;
        case IdKind::Record: return id.index() < records_;
        case IdKind::Provider: return id.index() < providers_;
    }
    return false;
}

std::string Universe::token(Id id) const {
    switch (id.kind()) {
        case IdKind::Person:
            if (id.index() >= people_) return "op" + std::to_string(id.index() - people_ + 1);
            return "p" + std::to_string(id.index() + 1);
        case IdKind::Space: return "m" + std::to_string(id.index() + 1);
        case IdKind::Record: return "r" + std::to_string(id.index() + 1);
        case IdKind::Provider: return "sp" + std::to_string(id.index() + 1);
    }
    return "?";
}

std::optional<Id> Universe::parse_token(std::string_view token) const {
    std::size_t split = 0;
    while (split < token.size() && !std::isdigit(static_cast<unsigned char>(token[split]))) ++split;
    std::string_view prefix = token.substr(0, split);
    std::string_view digits = token.substr(split);
    if (prefix.empty() || digits.empty() || digits.size() > 7) return std::nullopt;
    std::uint32_t n = 0;
    for (char c : digits) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        n = n * 10 + static_cast<std::uint32_t>(c - '0');
    }
    if (n == 0) return std::nullopt;
    std::uint32_t i = n - 1;
    if (prefix == "p" && i < people_) return Id(IdKind::Person, i);
    if (prefix == "op" && i < operators_) return Id(IdKind::Person, people_ + i);
    if (prefix == "m" && i < spaces_) return Id(IdKind::Space, i);
    if (prefix == "r" && i < records_) return Id(IdKind::Record, i);
    if (prefix == "sp" && i < providers_) return Id(IdKind::Provider, i);
    return std::nullopt;
}

// ---- Small helpers ----------------------------------------------------------

std::string_view to_string(RecordCategory c) {
    switch (c) {
        case RecordCategory::General: return "general";
        case RecordCategory::Restricted: return "restricted";
        case RecordCategory::Hidden: return "hidden";
    }
    return "?";
}

std::string_view to_string(InvariantId id) {
    static constexpr std::string_view names[kInvariantCount] = {
        "INV-1",  "INV-2",  "INV-3",  "INV-4",  "INV-5",  "INV-6",
        "INV-7",  "INV-8",  "INV-9",  "INV-10", "INV-11", "INV-12",
        "INV-13", "INV-14", "INV-15", "INV-16", "INV-17", "INV-18",
    };
    return names[static_cast<std::size_t>(id)];
}

std::optional<InvariantId> invariant_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kInvariantCount; ++i) {
        auto id = static_cast<InvariantId>(i);
        if (to_string(id) == name) return id;
    }
    return std::nullopt;
}

Id SystemState::owned_space(Id c) const {
    auto span = my_hr.pairs_with_left(c);
    if (span.empty()) throw UnknownIdError("no record space for " + universe.token(c));
    return span.front().right;
}

IdSet SystemState::records_of_space(Id m) const {
    std::vector<Id> out;
    for (const IdPair& rm : records_mhr)
        if (rm.right == m) out.push_back(rm.left);
    return IdSet(std::move(out));
}

std::optional<ProviderListKind> SystemState::provider_list(Id sp, Id m) const {
    if (general_sp_list.contains_pair(sp, m)) return ProviderListKind::General;
    if (restricted_sp_list.contains_pair(sp, m)) return ProviderListKind::Restricted;
    if (revoked_sp_list.contains_pair(sp, m)) return ProviderListKind::Revoked;
    return std::nullopt;
}

std::optional<NomineeListKind> SystemState::nominee_list(Id n, Id m) const {
    if (full_access_nominated.contains_pair(n, m)) return NomineeListKind::FullAccess;
    if (restricted_nominated.contains_pair(n, m)) return NomineeListKind::Restricted;
    if (general_nominated.contains_pair(n, m)) return NomineeListKind::General;
    return std::nullopt;
}

// ---- Initial state ----------------------------------------------------------

SystemState initial_state(const Universe& u, const IdSet& operators) {
    for (Id op : operators)
        if (!u.contains_kind(op, IdKind::Person))
            throw UnknownIdError("operator not in people universe");
    SystemState s(u);
    s.system_operators = operators;
    return s;
}

// ---- Invariant engine -------------------------------------------------------

namespace {

std::string fmt_set(const Universe& u, const IdSet& s, std::size_t cap = 6) {
    std::ostringstream os;
    os << "{";
    std::size_t i = 0;
    for (Id id : s) {
        if (i == cap) {
            os << ", ...";
            break;
        }
        os << (i ? ", " : "") << u.token(id);
        ++i;
    }
    os << "}";
    return os.str();
}

std::string fmt_rel(const Universe& u, const Relation& r, std::size_t cap = 6) {
    std::ostringstream os;
    os << "{";
    std::size_t i = 0;
    for (const IdPair& p : r) {
        if (i == cap) {
            os << ", ...";
            break;
        }
        os << (i ? ", " : "") << u.token(p.left) << "->" << u.token(p.right);
        ++i;
    }
    os << "}";
    return os.str();
}

class Violations {
public:
    explicit Violations(const SystemState& s) : s_(s) {}

    void require(InvariantId id, bool ok, const std::string& witness) {
        if (!ok) out_.push_back({id, witness});
    }

    void require_equal(InvariantId id, std::string_view var, const Relation& actual,
                       const Relation& expected) {
        if (actual == expected) return;
        std::string w(var);
        Relation missing = set_difference(expected, actual);
        Relation extra = set_difference(actual, expected);
        if (!missing.empty()) w += " missing " + fmt_rel(s_.universe, missing);
        if (!extra.empty())
            w += (missing.empty() ? std::string(" has unexpected ") : ", unexpected ") +
                 fmt_rel(s_.universe, extra);
        out_.push_back({id, w});
    }

    void require_subset(InvariantId id, std::string_view what, const Relation& small,
                        const Relation& big) {
        if (small.subset_of(big)) return;
        out_.push_back({id, std::string(what) + ": offending pairs " +
                                fmt_rel(s_.universe, set_difference(small, big))});
    }

    void require_disjoint_rel(InvariantId id, std::string_view what, const Relation& a,
                              const Relation& b) {
        Relation common = set_intersection(a, b);
        if (common.empty()) return;
        out_.push_back({id, std::string(what) + ": common pairs " + fmt_rel(s_.universe, common)});
    }

    std::vector<InvariantViolation> take() { return std::move(out_); }

private:
    const SystemState& s_;
    std::vector<InvariantViolation> out_;
};

// restricted access definition shared by INV-10 and INV-16:
// list_r;((general u restricted) <| records_mhr)~  u  list_g;(general <| records_mhr)~
Relation restricted_access_of(const SystemState& s, const Relation& restricted_list,
                              const Relation& general_list) {
    IdSet visible = set_union(s.general_records, s.restricted_records);
    Relation both = compose(restricted_list, inverse(domain_restrict(visible, s.records_mhr)));
    Relation gen = compose(general_list, inverse(domain_restrict(s.general_records, s.records_mhr)));
    return set_union(both, gen);
}

Relation general_access_of(const SystemState& s, const Relation& general_list) {
    return compose(general_list, inverse(domain_restrict(s.general_records, s.records_mhr)));
}

} // namespace

std::vector<InvariantViolation> check_invariants(const SystemState& s) {
    const Universe& u = s.universe;
    Violations v(s);

    v.require(InvariantId::INV1, is_bijection(s.my_hr, s.consumers, s.mhr_db),
              "my_hr " + fmt_rel(u, s.my_hr) + " is not a bijection " + fmt_set(u, s.consumers) +
                  " >-> " + fmt_set(u, s.mhr_db));

    IdSet op_consumers = set_intersection(s.system_operators, s.consumers);
    v.require(InvariantId::INV2, op_consumers.empty(),
              "operators registered as consumers: " + fmt_set(u, op_consumers));

    v.require(InvariantId::INV3,
              is_total_function(s.records_mhr, s.records) && ran(s.records_mhr).subset_of(s.mhr_db),
              "records_mhr " + fmt_rel(u, s.records_mhr) + " is not a total function " +
                  fmt_set(u, s.records) + " -> " + fmt_set(u, s.mhr_db));

    v.require(InvariantId::INV4,
              is_total_function(s.consumer_own_records, s.records) &&
                  ran(s.consumer_own_records).subset_of(s.consumers),
              "consumer_own_records " + fmt_rel(u, s.consumer_own_records) +
                  " is not a total function " + fmt_set(u, s.records) + " -> " +
                  fmt_set(u, s.consumers));

    {
        const IdSet* parts[] = {&s.general_records, &s.restricted_records, &s.hidden_records};
        v.require(InvariantId::INV5, is_partition(s.records, parts),
                  "categories do not partition records: general " + fmt_set(u, s.general_records) +
                      ", restricted " + fmt_set(u, s.restricted_records) + ", hidden " +
                      fmt_set(u, s.hidden_records) + ", records " + fmt_set(u, s.records));
    }

    // Ownership agrees with placement: every record sits in its owner's
    // space. Consumers without records keep their my_hr pair, so this is an
    // inclusion, not an equality.
    v.require_subset(InvariantId::INV6, "consumer_own_records~;records_mhr not within my_hr",
                     compose(inverse(s.consumer_own_records), s.records_mhr), s.my_hr);

    v.require_equal(InvariantId::INV7, "sp_mhr_access", s.sp_mhr_access,
                    compose(inverse(s.consumer_sp), s.my_hr));

    {
        const Relation* parts[] = {&s.general_sp_list, &s.restricted_sp_list, &s.revoked_sp_list};
        v.require(InvariantId::INV8, is_partition(s.sp_mhr_access, parts),
                  "provider lists do not partition sp_mhr_access " + fmt_rel(u, s.sp_mhr_access) +
                      ": general " + fmt_rel(u, s.general_sp_list) + ", restricted " +
                      fmt_rel(u, s.restricted_sp_list) + ", revoked " +
                      fmt_rel(u, s.revoked_sp_list));
    }

    v.require_equal(InvariantId::INV9, "general_sp_access", s.general_sp_access,
                    general_access_of(s, s.general_sp_list));

    v.require_equal(InvariantId::INV10, "restricted_sp_access", s.restricted_sp_access,
                    restricted_access_of(s, s.restricted_sp_list, s.general_sp_list));

    v.require_subset(InvariantId::INV11, "general_sp_access not within restricted_sp_access",
                     s.general_sp_access, s.restricted_sp_access);

    v.require_disjoint_rel(InvariantId::INV12, "nominee listed both general and restricted",
                           s.general_nominated, s.restricted_nominated);

    v.require_subset(InvariantId::INV13, "full_access_nominated not within restricted_nominated",
                     s.full_access_nominated, s.restricted_nominated);

    v.require_disjoint_rel(InvariantId::INV14, "owner nominated to their own space",
                           set_union(s.general_nominated, s.restricted_nominated), s.my_hr);

    v.require_equal(InvariantId::INV15, "general_nominated_access", s.general_nominated_access,
                    general_access_of(s, s.general_nominated));

    v.require_equal(InvariantId::INV16, "restricted_nominated_access",
                    s.restricted_nominated_access,
                    restricted_access_of(s, s.restricted_nominated, s.general_nominated));

    v.require_subset(InvariantId::INV17,
                     "general_nominated_access not within restricted_nominated_access",
                     s.general_nominated_access, s.restricted_nominated_access);

    v.require_disjoint_rel(InvariantId::INV18, "owner authorised for their own space",
                           s.authorised_rep, s.my_hr);

    return v.take();
}

SystemState recompute_derived(const SystemState& s) {
    SystemState next = s;
    next.sp_mhr_access = compose(inverse(s.consumer_sp), s.my_hr);
    next.general_sp_access = general_access_of(s, s.general_sp_list);
    next.restricted_sp_access = restricted_access_of(s, s.restricted_sp_list, s.general_sp_list);
    next.general_nominated_access = general_access_of(s, s.general_nominated);
    next.restricted_nominated_access =
        restricted_access_of(s, s.restricted_nominated, s.general_nominated);
    return next;
}

// ---- Access query -----------------------------------------------------------

bool can_view(const SystemState& s, const ActorRef& actor, Id record) {
    if (!s.records.contains(record))
        throw UnknownIdError("unknown record " + s.universe.token(record));
    if (s.hidden_records.contains(record)) return false;
    switch (actor.kind) {
        case ActorRef::Kind::Provider:
            return s.restricted_sp_access.contains_pair(actor.id, record);
        case ActorRef::Kind::Operator:
            return false;
        case ActorRef::Kind::Consumer: {
            if (s.consumer_own_records.contains_pair(record, actor.id)) return true;
            if (s.restricted_nominated_access.contains_pair(actor.id, record)) return true;
            auto rm = s.records_mhr.pairs_with_left(record);
            return !rm.empty() && s.authorised_rep.contains_pair(actor.id, rm.front().right);
        }
    }
    return false;
}

// ---- Canonical serialization --------------------------------------------------

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
    out.push_back(static_cast<std::uint8_t>(x));
    out.push_back(static_cast<std::uint8_t>(x >> 8));
    out.push_back(static_cast<std::uint8_t>(x >> 16));
    out.push_back(static_cast<std::uint8_t>(x >> 24));
}

void put_set(std::vector<std::uint8_t>& out, const IdSet& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    for (Id id : s) put_u32(out, id.raw());
}

void put_rel(std::vector<std::uint8_t>& out, const Relation& r) {
    put_u32(out, static_cast<std::uint32_t>(r.size()));
    for (const IdPair& p : r) {
        put_u32(out, p.left.raw());
        put_u32(out, p.right.raw());
    }
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        if (pos_ + 4 > bytes_.size()) throw std::runtime_error("truncated state bytes");
        std::uint32_t x = bytes_[pos_] | (bytes_[pos_ + 1] << 8) | (bytes_[pos_ + 2] << 16) |
                          (static_cast<std::uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return x;
    }

    IdSet set() {
        std::uint32_t n = u32();
        std::vector<Id> ids;
        ids.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) ids.push_back(Id::from_raw(u32()));
        return IdSet(std::move(ids));
    }

    Relation rel() {
        std::uint32_t n = u32();
        std::vector<IdPair> pairs;
        pairs.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            Id l = Id::from_raw(u32());
            Id r = Id::from_raw(u32());
            pairs.push_back(IdPair{l, r});
        }
        return Relation(std::move(pairs));
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

template <typename State, typename SetFn, typename RelFn>
void for_each_field(State& s, SetFn set_fn, RelFn rel_fn) {
    set_fn(s.consumers);
    set_fn(s.system_operators);
    set_fn(s.mhr_db);
    rel_fn(s.my_hr);
    set_fn(s.records);
    rel_fn(s.records_mhr);
    rel_fn(s.consumer_own_records);
    set_fn(s.general_records);
    set_fn(s.restricted_records);
    set_fn(s.hidden_records);
    set_fn(s.service_providers);
    rel_fn(s.consumer_sp);
    rel_fn(s.sp_mhr_access);
    rel_fn(s.general_sp_list);
    rel_fn(s.restricted_sp_list);
    rel_fn(s.revoked_sp_list);
    rel_fn(s.general_sp_access);
    rel_fn(s.restricted_sp_access);
    rel_fn(s.general_nominated);
    rel_fn(s.restricted_nominated);
    rel_fn(s.full_access_nominated);
    rel_fn(s.general_nominated_access);
    rel_fn(s.restricted_nominated_access);
    rel_fn(s.authorised_rep);
}

} // namespace

std::vector<std::uint8_t> to_bytes(const SystemState& s) {
    std::vector<std::uint8_t> out;
    out.reserve(128 + 8 * (s.records.size() + s.my_hr.size() + s.restricted_sp_access.size()));
    put_u32(out, s.universe.people_count());
    put_u32(out, s.universe.operator_count());
    put_u32(out, s.universe.space_count());
    put_u32(out, s.universe.record_count());
    put_u32(out, s.universe.provider_count());
    for_each_field(
        s, [&](const IdSet& set) { put_set(out, set); },
        [&](const Relation& rel) { put_rel(out, rel); });
    return out;
}

SystemState from_bytes(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    std::uint32_t people = in.u32();
    std::uint32_t operators = in.u32();
    std::uint32_t spaces = in.u32();
    std::uint32_t records = in.u32();
    std::uint32_t providers = in.u32();
    SystemState s(Universe(people, operators, spaces, records, providers));
    for_each_field(
        s, [&](IdSet& set) { set = in.set(); }, [&](Relation& rel) { rel = in.rel(); });
    if (!in.done()) throw std::runtime_error("trailing bytes in serialized state");
    return s;
}

std::uint64_t hash_state(const SystemState& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint8_t b : to_bytes(s)) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_canonical_json(const SystemState& s, int indent) {
    using nlohmann::json;
    const Universe& u = s.universe;

    auto set_to_json = [&](const IdSet& set) {
        json a = json::array();
        for (Id id : set) a.push_back(u.token(id));
        return a;
    };
    auto rel_to_json = [&](const Relation& rel) {
        json a = json::array();
        for (const IdPair& p : rel) a.push_back(json::array({u.token(p.left), u.token(p.right)}));
        return a;
    };

    json j;
    j["universe"] = {{"people", u.people_count()},
                     {"operators", u.operator_count()},
                     {"spaces", u.space_count()},
                     {"records", u.record_count()},
                     {"providers", u.provider_count()}};
    j["consumers"] = set_to_json(s.consumers);
    j["system_operators"] = set_to_json(s.system_operators);
    j["mhr_db"] = set_to_json(s.mhr_db);
    j["my_hr"] = rel_to_json(s.my_hr);
    j["records"] = set_to_json(s.records);
    j["records_mhr"] = rel_to_json(s.records_mhr);
    j["consumer_own_records"] = rel_to_json(s.consumer_own_records);
    j["general_records"] = set_to_json(s.general_records);
    j["restricted_records"] = set_to_json(s.restricted_records);
    j["hidden_records"] = set_to_json(s.hidden_records);
    j["service_providers"] = set_to_json(s.service_providers);
    j["consumer_sp"] = rel_to_json(s.consumer_sp);
    j["sp_mhr_access"] = rel_to_json(s.sp_mhr_access);
    j["general_sp_list"] = rel_to_json(s.general_sp_list);
    j["restricted_sp_list"] = rel_to_json(s.restricted_sp_list);
    j["revoked_sp_list"] = rel_to_json(s.revoked_sp_list);
    j["general_sp_access"] = rel_to_json(s.general_sp_access);
    j["restricted_sp_access"] = rel_to_json(s.restricted_sp_access);
    j["general_nominated"] = rel_to_json(s.general_nominated);
    j["restricted_nominated"] = rel_to_json(s.restricted_nominated);
    j["full_access_nominated"] = rel_to_json(s.full_access_nominated);
    j["general_nominated_access"] = rel_to_json(s.general_nominated_access);
    j["restricted_nominated_access"] = rel_to_json(s.restricted_nominated_access);
    j["authorised_rep"] = rel_to_json(s.authorised_rep);
    return j.dump(indent);
}

} // namespace mhr
