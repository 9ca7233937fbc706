#include "mhr/kernel.hpp"

#include <sstream>

namespace mhr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

// ---- Mutants ----------------------------------------------------------------

std::string_view to_string(Mutant m) {
    switch (m) {
        case Mutant::None: return "none";
        case Mutant::DropRevokeAccessCut: return "drop_act4_r1";
        case Mutant::DropSelfNominationGuard: return "drop_grd1_r2";
        case Mutant::DropRestrictCategoryMove: return "drop_act2_restrict";
        case Mutant::DropHideAccessCleanup: return "drop_hide_cleanup";
        case Mutant::DropOptOutCascade: return "drop_optout_cascade";
        case Mutant::DropUploadFreshGuard: return "drop_upload_fresh_guard";
    }
    return "?";
}

std::span<const Mutant> all_mutants() {
    static constexpr Mutant kMutants[] = {
        Mutant::DropRevokeAccessCut,      Mutant::DropSelfNominationGuard,
        Mutant::DropRestrictCategoryMove, Mutant::DropHideAccessCleanup,
        Mutant::DropOptOutCascade,        Mutant::DropUploadFreshGuard,
    };
    return kMutants;
}

std::optional<Mutant> mutant_from_string(std::string_view name) {
    if (name == "none") return Mutant::None;
    for (Mutant m : all_mutants())
        if (to_string(m) == name) return m;
    return std::nullopt;
}

// ---- Event metadata ----------------------------------------------------------

std::string_view event_name(const Event& e) {
    return std::visit(
        overloaded{
            [](const RegisterConsumer&) { return std::string_view("register_consumer"); },
            [](const OptOut&) { return std::string_view("opt_out"); },
            [](const UploadRecord&) { return std::string_view("upload_record"); },
            [](const DeleteRecord&) { return std::string_view("delete_record"); },
            [](const RestrictRecord&) { return std::string_view("restrict_record"); },
            [](const GeneralRecord&) { return std::string_view("general_record"); },
            [](const HideRecord&) { return std::string_view("hide_record"); },
            [](const UnhideRecord&) { return std::string_view("unhide_record"); },
            [](const ViewRecord&) { return std::string_view("view_record"); },
            [](const RegisterServiceProvider&) {
                return std::string_view("register_service_provider");
            },
            [](const AssignProvider&) { return std::string_view("assign_provider"); },
            [](const GrantGeneralSp&) { return std::string_view("grant_general_sp"); },
            [](const GrantRestrictedSp&) { return std::string_view("grant_restricted_sp"); },
            [](const RevokeAccessSp&) { return std::string_view("revoke_access_sp"); },
            [](const UploadGeneralRecordSp&) {
                return std::string_view("upload_general_record_SP");
            },
            [](const UploadRestrictedRecordSp&) {
                return std::string_view("upload_restricted_record_SP");
            },
            [](const AddNominatedGeneral&) { return std::string_view("add_nominated_general"); },
            [](const AddNominatedRestricted&) {
                return std::string_view("add_nominated_restricted");
            },
            [](const GrantFullAccessNominated&) {
                return std::string_view("grant_full_access_to_nominated");
            },
            [](const RemoveNominated&) { return std::string_view("remove_nominated"); },
            [](const UploadGeneralRecordNominated&) {
                return std::string_view("upload_general_record_nominated");
            },
            [](const UploadRestrictedRecordNominated&) {
                return std::string_view("upload_restricted_record_nominated");
            },
            [](const AssignAuthorisedRep&) { return std::string_view("assign_authorised_rep"); },
            [](const RemoveAuthorisedRep&) { return std::string_view("remove_authorised_rep"); },
        },
        e);
}

namespace {

struct EventKey {
    std::array<std::uint64_t, 4> params{};
    std::size_t len = 0;

    void add(Id id) { params[len++] = id.raw(); }
    void add(const ActorRef& a) {
        params[len++] = (static_cast<std::uint64_t>(a.kind) << 32) | a.id.raw();
    }
    void add(RecordCategory c) { params[len++] = static_cast<std::uint64_t>(c); }
};

EventKey event_key(const Event& e) {
    EventKey k;
    std::visit(overloaded{
                   [&](const RegisterConsumer& v) {
                       k.add(v.person);
                       k.add(v.space);
                   },
                   [&](const OptOut& v) { k.add(v.consumer); },
                   [&](const UploadRecord& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.record);
                       k.add(v.category);
                   },
                   [&](const DeleteRecord& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const RestrictRecord& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const GeneralRecord& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const HideRecord& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const UnhideRecord& v) {
                       k.add(v.operator_person);
                       k.add(v.record);
                   },
                   [&](const ViewRecord& v) {
                       k.add(v.actor);
                       k.add(v.record);
                   },
                   [&](const RegisterServiceProvider& v) { k.add(v.provider); },
                   [&](const AssignProvider& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.provider);
                   },
                   [&](const GrantGeneralSp& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.provider);
                   },
                   [&](const GrantRestrictedSp& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.provider);
                   },
                   [&](const RevokeAccessSp& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.provider);
                   },
                   [&](const UploadGeneralRecordSp& v) {
                       k.add(v.provider);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const UploadRestrictedRecordSp& v) {
                       k.add(v.provider);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const AddNominatedGeneral& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.nominee);
                   },
                   [&](const AddNominatedRestricted& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.nominee);
                   },
                   [&](const GrantFullAccessNominated& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.nominee);
                   },
                   [&](const RemoveNominated& v) {
                       k.add(v.actor);
                       k.add(v.owner);
                       k.add(v.nominee);
                   },
                   [&](const UploadGeneralRecordNominated& v) {
                       k.add(v.nominee);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const UploadRestrictedRecordNominated& v) {
                       k.add(v.nominee);
                       k.add(v.owner);
                       k.add(v.record);
                   },
                   [&](const AssignAuthorisedRep& v) {
                       k.add(v.operator_person);
                       k.add(v.representative);
                       k.add(v.owner);
                   },
                   [&](const RemoveAuthorisedRep& v) {
                       k.add(v.operator_person);
                       k.add(v.representative);
                       k.add(v.owner);
                   },
               },
               e);
    return k;
}

} // namespace

std::vector<std::string> event_args(const Event& e, const Universe& u) {
    std::vector<std::string> args;
    EventKey k = event_key(e);
    const bool is_upload_record = std::holds_alternative<UploadRecord>(e);
    for (std::size_t i = 0; i < k.len; ++i) {
        if (is_upload_record && i + 1 == k.len) {
            args.emplace_back(to_string(static_cast<RecordCategory>(k.params[i])));
        } else {
            args.push_back(u.token(Id::from_raw(static_cast<std::uint32_t>(k.params[i]))));
        }
    }
    return args;
}

std::string event_line(const Event& e, const Universe& u) {
    std::string line(event_name(e));
    for (const std::string& a : event_args(e, u)) {
        line += ' ';
        line += a;
    }
    return line;
}

bool event_less(const Event& a, const Event& b) {
    auto na = event_name(a);
    auto nb = event_name(b);
    if (na != nb) return na < nb;
    EventKey ka = event_key(a);
    EventKey kb = event_key(b);
    return ka.params < kb.params;
}

bool is_owner_control_event(const Event& e) {
    return std::visit(overloaded{
                          [](const UploadRecord&) { return true; },
                          [](const DeleteRecord&) { return true; },
                          [](const RestrictRecord&) { return true; },
                          [](const GeneralRecord&) { return true; },
                          [](const HideRecord&) { return true; },
                          [](const AssignProvider&) { return true; },
                          [](const GrantGeneralSp&) { return true; },
                          [](const GrantRestrictedSp&) { return true; },
                          [](const RevokeAccessSp&) { return true; },
                          [](const AddNominatedGeneral&) { return true; },
                          [](const AddNominatedRestricted&) { return true; },
                          [](const GrantFullAccessNominated&) { return true; },
                          [](const RemoveNominated&) { return true; },
                          [](const auto&) { return false; },
                      },
                      e);
}

// ---- Identifier validation ----------------------------------------------------

namespace {

void require_id(const Universe& u, Id id, IdKind kind, const char* slot) {
    if (id.kind() != kind || !u.contains(id))
        throw UnknownIdError(std::string(slot) + " identifier outside universe: " + u.token(id));
}

void require_actor(const Universe& u, const ActorRef& a) {
    IdKind expected =
        a.kind == ActorRef::Kind::Provider ? IdKind::Provider : IdKind::Person;
    require_id(u, a.id, expected, "actor");
}

void validate_event(const Universe& u, const Event& e) {
    std::visit(overloaded{
                   [&](const RegisterConsumer& v) {
                       require_id(u, v.person, IdKind::Person, "person");
                       require_id(u, v.space, IdKind::Space, "space");
                   },
                   [&](const OptOut& v) { require_id(u, v.consumer, IdKind::Person, "consumer"); },
                   [&](const UploadRecord& v) {
                       require_actor(u, v.actor);
                       require_id(u, v.owner, IdKind::Person, "owner");
                       require_id(u, v.record, IdKind::Record, "record");
                       if (v.category == RecordCategory::Hidden)
                           throw std::invalid_argument("uploads must be general or restricted");
                   },
                   [&](const UnhideRecord& v) {
                       require_id(u, v.operator_person, IdKind::Person, "operator");
                       require_id(u, v.record, IdKind::Record, "record");
                   },
                   [&](const ViewRecord& v) {
                       require_actor(u, v.actor);
                       require_id(u, v.record, IdKind::Record, "record");
                   },
                   [&](const RegisterServiceProvider& v) {
                       require_id(u, v.provider, IdKind::Provider, "provider");
                   },
                   [&](const UploadGeneralRecordSp& v) {
                       require_id(u, v.provider, IdKind::Provider, "provider");
                       require_id(u, v.owner, IdKind::Person, "owner");
                       require_id(u, v.record, IdKind::Record, "record");
                   },
                   [&](const UploadRestrictedRecordSp& v) {
                       require_id(u, v.provider, IdKind::Provider, "provider");
                       require_id(u, v.owner, IdKind::Person, "owner");
                       require_id(u, v.record, IdKind::Record, "record");
                   },
                   [&](const UploadGeneralRecordNominated& v) {
                       require_id(u, v.nominee, IdKind::Person, "nominee");
                       require_id(u, v.owner, IdKind::Person, "owner");
                       require_id(u, v.record, IdKind::Record, "record");
                   },
                   [&](const UploadRestrictedRecordNominated& v) {
                       require_id(u, v.nominee, IdKind::Person, "nominee");
                       require_id(u, v.owner, IdKind::Person, "owner");
                       require_id(u, v.record, IdKind::Record, "record");
                   },
                   [&](const AssignAuthorisedRep& v) {
                       require_id(u, v.operator_person, IdKind::Person, "operator");
                       require_id(u, v.representative, IdKind::Person, "representative");
                       require_id(u, v.owner, IdKind::Person, "owner");
                   },
                   [&](const RemoveAuthorisedRep& v) {
                       require_id(u, v.operator_person, IdKind::Person, "operator");
                       require_id(u, v.representative, IdKind::Person, "representative");
                       require_id(u, v.owner, IdKind::Person, "owner");
                   },
                   [&](const auto& v) {
                       // actor + owner + one of record/provider/nominee
                       require_actor(u, v.actor);
                       require_id(u, v.owner, IdKind::Person, "owner");
                       if constexpr (requires { v.record; })
                           require_id(u, v.record, IdKind::Record, "record");
                       else if constexpr (requires { v.provider; })
                           require_id(u, v.provider, IdKind::Provider, "provider");
                       else
                           require_id(u, v.nominee, IdKind::Person, "nominee");
                   },
               },
               e);
}

} // namespace

// ---- Guards -------------------------------------------------------------------

bool actor_controls(const SystemState& s, const ActorRef& actor, Id owner) {
    if (actor.kind != ActorRef::Kind::Consumer) return false;
    auto owned = s.my_hr.pairs_with_left(owner);
    if (owned.empty()) return false;
    Id space = owned.front().right;
    if (actor.id == owner) {
        for (const IdPair& rep : s.authorised_rep)
            if (rep.right == space) return false;
        return true;
    }
    return s.authorised_rep.contains_pair(actor.id, space);
}

namespace {

constexpr const char* kNoControl = "actor has no control over this record space";

GuardFail control_guards(const SystemState& s, const ActorRef& actor, Id owner) {
    if (!s.consumers.contains(owner)) return {"grd1", "owner is not a registered consumer"};
    if (!actor_controls(s, actor, owner)) return {"grd_ctrl", kNoControl};
    return {};
}

GuardFail ownership_guards(const SystemState& s, const ActorRef& actor, Id owner, Id record) {
    if (!s.consumer_own_records.contains_pair(record, owner))
        return {"grd1", "record is not owned by this consumer"};
    if (!actor_controls(s, actor, owner)) return {"grd_ctrl", kNoControl};
    return {};
}

GuardFail nominee_free_guards(const SystemState& s, Id nominee, Id space, const char* g_general,
                              const char* g_restricted, const char* g_full) {
    if (s.general_nominated.contains_pair(nominee, space))
        return {g_general, "already a general nominee of this space"};
    if (s.restricted_nominated.contains_pair(nominee, space))
        return {g_restricted, "already a restricted nominee of this space"};
    if (s.full_access_nominated.contains_pair(nominee, space))
        return {g_full, "already a full-access nominee of this space"};
    return {};
}

struct GuardCheck {
    const SystemState& s;
    Mutant mutant;

    GuardFail operator()(const RegisterConsumer& e) const {
        if (s.consumers.contains(e.person)) return {"grd1", "already a registered consumer"};
        if (s.system_operators.contains(e.person))
            return {"grd2", "system operators cannot register as consumers"};
        if (s.mhr_db.contains(e.space)) return {"grd3", "record space already in use"};
        return {};
    }

    GuardFail operator()(const OptOut& e) const {
        if (!s.consumers.contains(e.consumer)) return {"grd1", "not a registered consumer"};
        return {};
    }

    GuardFail operator()(const UploadRecord& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        if (mutant != Mutant::DropUploadFreshGuard && s.records.contains(e.record))
            return {"grd2", "record identifier already in use"};
        return {};
    }

    GuardFail operator()(const DeleteRecord& e) const {
        return ownership_guards(s, e.actor, e.owner, e.record);
    }

    GuardFail operator()(const RestrictRecord& e) const {
        if (GuardFail f = ownership_guards(s, e.actor, e.owner, e.record)) return f;
        if (s.hidden_records.contains(e.record))
            return {"grd2", "hidden records cannot be re-marked"};
        return {};
    }

    GuardFail operator()(const GeneralRecord& e) const {
        if (GuardFail f = ownership_guards(s, e.actor, e.owner, e.record)) return f;
        if (s.hidden_records.contains(e.record))
            return {"grd2", "hidden records cannot be re-marked"};
        return {};
    }

    GuardFail operator()(const HideRecord& e) const {
        if (GuardFail f = ownership_guards(s, e.actor, e.owner, e.record)) return f;
        if (s.hidden_records.contains(e.record)) return {"grd2", "record is already hidden"};
        return {};
    }

    GuardFail operator()(const UnhideRecord& e) const {
        if (!s.system_operators.contains(e.operator_person))
            return {"grd1", "not a system operator"};
        if (!s.hidden_records.contains(e.record)) return {"grd2", "record is not hidden"};
        return {};
    }

    GuardFail operator()(const ViewRecord& e) const {
        if (!s.records.contains(e.record)) return {"grd1", "record is not active"};
        if (!can_view(s, e.actor, e.record)) return {"grd2", "actor has no access to this record"};
        return {};
    }

    GuardFail operator()(const RegisterServiceProvider& e) const {
        if (s.service_providers.contains(e.provider))
            return {"grd1", "already a registered service provider"};
        return {};
    }

    GuardFail operator()(const AssignProvider& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        if (!s.service_providers.contains(e.provider))
            return {"grd2", "service provider is not registered"};
        if (s.consumer_sp.contains_pair(e.owner, e.provider))
            return {"grd3", "provider already linked to this consumer"};
        return {};
    }

    GuardFail operator()(const GrantGeneralSp& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        Id space = s.owned_space(e.owner);
        if (!s.sp_mhr_access.contains_pair(e.provider, space))
            return {"grd2", "provider has no access to this record space"};
        if (s.general_sp_list.contains_pair(e.provider, space))
            return {"grd3", "provider already in the general list"};
        return {};
    }

    GuardFail operator()(const GrantRestrictedSp& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        Id space = s.owned_space(e.owner);
        if (!s.sp_mhr_access.contains_pair(e.provider, space))
            return {"grd2", "provider has no access to this record space"};
        if (s.restricted_sp_list.contains_pair(e.provider, space))
            return {"grd3", "provider already in the restricted list"};
        return {};
    }

    GuardFail operator()(const RevokeAccessSp& e) const {
        if (!s.consumers.contains(e.owner))
            return {"grd1_r1", "owner is not a registered consumer"};
        if (!actor_controls(s, e.actor, e.owner)) return {"grd_ctrl", kNoControl};
        if (!s.consumer_sp.contains_pair(e.owner, e.provider))
            return {"grd2_r1", "provider is not in charge of this consumer"};
        if (s.revoked_sp_list.contains_pair(e.provider, s.owned_space(e.owner)))
            return {"grd3_r1", "provider is already revoked for this space"};
        return {};
    }

    GuardFail operator()(const UploadGeneralRecordSp& e) const {
        if (!s.consumers.contains(e.owner)) return {"grd1", "owner is not a registered consumer"};
        if (!s.general_sp_list.contains_pair(e.provider, s.owned_space(e.owner)))
            return {"grd2", "provider is not in the general list for this space"};
        if (s.records.contains(e.record)) return {"grd3", "record identifier already in use"};
        return {};
    }

    GuardFail operator()(const UploadRestrictedRecordSp& e) const {
        if (!s.consumers.contains(e.owner)) return {"grd1", "owner is not a registered consumer"};
        if (!s.restricted_sp_list.contains_pair(e.provider, s.owned_space(e.owner)))
            return {"grd2", "provider is not in the restricted list for this space"};
        if (s.records.contains(e.record)) return {"grd3", "record identifier already in use"};
        return {};
    }

    GuardFail operator()(const AddNominatedGeneral& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        if (e.nominee == e.owner) return {"grd2", "owners cannot nominate themselves"};
        if (!s.consumers.contains(e.nominee))
            return {"grd3", "nominee is not a registered consumer"};
        return nominee_free_guards(s, e.nominee, s.owned_space(e.owner), "grd4", "grd5", "grd6");
    }

    GuardFail operator()(const AddNominatedRestricted& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        if (e.nominee == e.owner) return {"grd2", "owners cannot nominate themselves"};
        if (!s.consumers.contains(e.nominee))
            return {"grd3", "nominee is not a registered consumer"};
        return nominee_free_guards(s, e.nominee, s.owned_space(e.owner), "grd4", "grd5", "grd6");
    }

    GuardFail operator()(const GrantFullAccessNominated& e) const {
        if (mutant != Mutant::DropSelfNominationGuard && e.nominee == e.owner)
            return {"grd1_r2", "owners cannot nominate themselves"};
        if (!s.consumers.contains(e.owner))
            return {"grd2_r2", "owner is not a registered consumer"};
        if (!s.consumers.contains(e.nominee))
            return {"grd_n", "nominee is not a registered consumer"};
        if (!actor_controls(s, e.actor, e.owner)) return {"grd_ctrl", kNoControl};
        return nominee_free_guards(s, e.nominee, s.owned_space(e.owner), "grd3_r2", "grd4_r2",
                                   "grd5_r2");
    }

    GuardFail operator()(const RemoveNominated& e) const {
        if (GuardFail f = control_guards(s, e.actor, e.owner)) return f;
        if (!s.nominee_list(e.nominee, s.owned_space(e.owner)))
            return {"grd2", "not a nominee of this space"};
        return {};
    }

    GuardFail operator()(const UploadGeneralRecordNominated& e) const {
        if (!s.consumers.contains(e.owner)) return {"grd1", "owner is not a registered consumer"};
        if (!s.full_access_nominated.contains_pair(e.nominee, s.owned_space(e.owner)))
            return {"grd2", "nominee does not have full access to this space"};
        if (s.records.contains(e.record)) return {"grd3", "record identifier already in use"};
        return {};
    }

    GuardFail operator()(const UploadRestrictedRecordNominated& e) const {
        if (!s.consumers.contains(e.owner)) return {"grd1", "owner is not a registered consumer"};
        if (!s.full_access_nominated.contains_pair(e.nominee, s.owned_space(e.owner)))
            return {"grd2", "nominee does not have full access to this space"};
        if (s.records.contains(e.record)) return {"grd3", "record identifier already in use"};
        return {};
    }

    GuardFail operator()(const AssignAuthorisedRep& e) const {
        if (!s.system_operators.contains(e.operator_person))
            return {"grd1", "not a system operator"};
        if (!s.consumers.contains(e.owner)) return {"grd2", "owner is not a registered consumer"};
        if (!s.consumers.contains(e.representative))
            return {"grd3", "representative is not a registered consumer"};
        if (e.representative == e.owner)
            return {"grd4", "consumers cannot represent their own space"};
        if (s.authorised_rep.contains_pair(e.representative, s.owned_space(e.owner)))
            return {"grd5", "already an authorised representative of this space"};
        return {};
    }

    GuardFail operator()(const RemoveAuthorisedRep& e) const {
        if (!s.system_operators.contains(e.operator_person))
            return {"grd1", "not a system operator"};
        if (!s.consumers.contains(e.owner)) return {"grd2", "owner is not a registered consumer"};
        if (!s.authorised_rep.contains_pair(e.representative, s.owned_space(e.owner)))
            return {"grd3", "not an authorised representative of this space"};
        return {};
    }
};

} // namespace

GuardFail first_failing_guard(const SystemState& s, const Event& e, Mutant mutant) {
    return std::visit(GuardCheck{s, mutant}, e);
}

// ---- Actions ------------------------------------------------------------------

namespace {

// Extends the four derived access relations for a record that just became
// visible (fresh upload, unhide, or re-marking to general).
void add_record_access(SystemState& st, Id record, Id space, bool is_general) {
    for (const IdPair& lm : st.general_sp_list) {
        if (lm.right != space || !is_general) continue;
        st.general_sp_access.insert_pair(lm.left, record);
        st.restricted_sp_access.insert_pair(lm.left, record);
    }
    for (const IdPair& lm : st.restricted_sp_list)
        if (lm.right == space) st.restricted_sp_access.insert_pair(lm.left, record);
    for (const IdPair& nm : st.general_nominated) {
        if (nm.right != space || !is_general) continue;
        st.general_nominated_access.insert_pair(nm.left, record);
        st.restricted_nominated_access.insert_pair(nm.left, record);
    }
    for (const IdPair& nm : st.restricted_nominated)
        if (nm.right == space) st.restricted_nominated_access.insert_pair(nm.left, record);
}

void drop_record_access(SystemState& st, Id record) {
    auto drop = [&](Relation& rel) {
        rel.erase_if([&](const IdPair& p) { return p.right == record; });
    };
    drop(st.general_sp_access);
    drop(st.restricted_sp_access);
    drop(st.general_nominated_access);
    drop(st.restricted_nominated_access);
}

void do_upload(SystemState& st, Id owner, Id record, RecordCategory category) {
    Id space = st.owned_space(owner);
    st.records.insert(record);
    st.records_mhr.insert_pair(record, space);
    st.consumer_own_records.insert_pair(record, owner);
    if (category == RecordCategory::General) {
        st.general_records.insert(record);
        add_record_access(st, record, space, true);
    } else {
        st.restricted_records.insert(record);
        add_record_access(st, record, space, false);
    }
}

// Re-derives one provider's access pairs for one space from its current list
// membership and the record categories.
void refresh_sp_slice(SystemState& st, Id sp, Id space) {
    IdSet space_records = st.records_of_space(space);
    for (Id r : space_records) {
        st.general_sp_access.erase_pair(sp, r);
        st.restricted_sp_access.erase_pair(sp, r);
    }
    auto kind = st.provider_list(sp, space);
    if (!kind || *kind == ProviderListKind::Revoked) return;
    for (Id r : space_records) {
        bool general = st.general_records.contains(r);
        bool restricted = st.restricted_records.contains(r);
        if (*kind == ProviderListKind::General && general) {
            st.general_sp_access.insert_pair(sp, r);
            st.restricted_sp_access.insert_pair(sp, r);
        } else if (*kind == ProviderListKind::Restricted && (general || restricted)) {
            st.restricted_sp_access.insert_pair(sp, r);
        }
    }
}

struct Execute {
    const SystemState& s;
    Mutant mutant;

    SystemState operator()(const RegisterConsumer& e) const {
        SystemState next = s;
        next.consumers.insert(e.person);
        next.mhr_db.insert(e.space);
        next.my_hr.insert_pair(e.person, e.space);
        return next;
    }

    SystemState operator()(const OptOut& e) const {
        Id c = e.consumer;
        Id space = s.owned_space(c);
        SystemState next = s;
        next.consumers.erase(c);
        next.mhr_db.erase(space);
        next.my_hr.erase_pair(c, space);
        if (mutant == Mutant::DropOptOutCascade) return next;

        // Everything anchored to the departing space or consumer goes with
        // them; anything less would leave dangling records, links or access.
        IdSet space_records = s.records_of_space(space);
        for (Id r : space_records) {
            next.records.erase(r);
            next.general_records.erase(r);
            next.restricted_records.erase(r);
            next.hidden_records.erase(r);
            next.records_mhr.erase_pair(r, space);
            next.consumer_own_records.erase_pair(r, c);
        }
        auto of_space_record = [&](const IdPair& p) { return space_records.contains(p.right); };
        next.general_sp_access.erase_if(of_space_record);
        next.restricted_sp_access.erase_if(of_space_record);

        next.consumer_sp.erase_if([&](const IdPair& p) { return p.left == c; });
        auto to_space = [&](const IdPair& p) { return p.right == space; };
        next.sp_mhr_access.erase_if(to_space);
        next.general_sp_list.erase_if(to_space);
        next.restricted_sp_list.erase_if(to_space);
        next.revoked_sp_list.erase_if(to_space);

        auto nominee_gone = [&](const IdPair& p) { return p.right == space || p.left == c; };
        next.general_nominated.erase_if(nominee_gone);
        next.restricted_nominated.erase_if(nominee_gone);
        next.full_access_nominated.erase_if(nominee_gone);
        auto access_gone = [&](const IdPair& p) {
            return p.left == c || space_records.contains(p.right);
        };
        next.general_nominated_access.erase_if(access_gone);
        next.restricted_nominated_access.erase_if(access_gone);
        next.authorised_rep.erase_if(nominee_gone);
        return next;
    }

    SystemState operator()(const UploadRecord& e) const {
        SystemState next = s;
        do_upload(next, e.owner, e.record, e.category);
        return next;
    }

    SystemState operator()(const DeleteRecord& e) const {
        SystemState next = s;
        Id r = e.record;
        next.records.erase(r);
        next.general_records.erase(r);
        next.restricted_records.erase(r);
        next.hidden_records.erase(r);
        next.records_mhr.erase_pair(r, s.owned_space(e.owner));
        next.consumer_own_records.erase_pair(r, e.owner);
        drop_record_access(next, r);
        return next;
    }

    SystemState operator()(const RestrictRecord& e) const {
        SystemState next = s;
        Id r = e.record;
        Id space = s.owned_space(e.owner);
        next.restricted_records.insert(r);
        if (mutant != Mutant::DropRestrictCategoryMove) next.general_records.erase(r);
        // Actors listed general for this space lose the record; restricted
        // listings keep it, since they see both categories.
        for (const IdPair& lm : s.general_sp_list) {
            if (lm.right != space) continue;
            next.general_sp_access.erase_pair(lm.left, r);
            next.restricted_sp_access.erase_pair(lm.left, r);
        }
        for (const IdPair& nm : s.general_nominated) {
            if (nm.right != space) continue;
            next.general_nominated_access.erase_pair(nm.left, r);
            next.restricted_nominated_access.erase_pair(nm.left, r);
        }
        return next;
    }

    SystemState operator()(const GeneralRecord& e) const {
        SystemState next = s;
        Id r = e.record;
        Id space = s.owned_space(e.owner);
        next.general_records.insert(r);
        next.restricted_records.erase(r);
        add_record_access(next, r, space, true);
        return next;
    }

    SystemState operator()(const HideRecord& e) const {
        SystemState next = s;
        Id r = e.record;
        next.hidden_records.insert(r);
        next.general_records.erase(r);
        next.restricted_records.erase(r);
        if (mutant != Mutant::DropHideAccessCleanup) drop_record_access(next, r);
        return next;
    }

    SystemState operator()(const UnhideRecord& e) const {
        SystemState next = s;
        Id r = e.record;
        next.hidden_records.erase(r);
        next.general_records.insert(r);
        auto rm = s.records_mhr.pairs_with_left(r);
        add_record_access(next, r, rm.front().right, true);
        return next;
    }

    SystemState operator()(const ViewRecord&) const { return s; }

    SystemState operator()(const RegisterServiceProvider& e) const {
        SystemState next = s;
        next.service_providers.insert(e.provider);
        return next;
    }

    SystemState operator()(const AssignProvider& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.consumer_sp.insert_pair(e.owner, e.provider);
        next.sp_mhr_access.insert_pair(e.provider, space);
        next.general_sp_list.insert_pair(e.provider, space);
        refresh_sp_slice(next, e.provider, space);
        return next;
    }

    SystemState operator()(const GrantGeneralSp& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.general_sp_list.insert_pair(e.provider, space);
        next.restricted_sp_list.erase_pair(e.provider, space);
        next.revoked_sp_list.erase_pair(e.provider, space);
        refresh_sp_slice(next, e.provider, space);
        return next;
    }

    SystemState operator()(const GrantRestrictedSp& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.restricted_sp_list.insert_pair(e.provider, space);
        next.general_sp_list.erase_pair(e.provider, space);
        next.revoked_sp_list.erase_pair(e.provider, space);
        refresh_sp_slice(next, e.provider, space);
        return next;
    }

    SystemState operator()(const RevokeAccessSp& e) const {
        SystemState next = s;
        Id sp = e.provider;
        Id space = s.owned_space(e.owner);
        next.revoked_sp_list.insert_pair(sp, space);
        next.restricted_sp_list.erase_pair(sp, space);
        next.general_sp_list.erase_pair(sp, space);
        IdSet sp_only{{sp}};
        IdSet space_records = image(inverse(s.records_mhr), IdSet{{space}});
        if (mutant != Mutant::DropRevokeAccessCut)
            next.general_sp_access = set_difference(
                next.general_sp_access,
                range_restrict(domain_restrict(sp_only, s.general_sp_access), space_records));
        next.restricted_sp_access = set_difference(
            next.restricted_sp_access,
            range_restrict(domain_restrict(sp_only, s.restricted_sp_access), space_records));
        return next;
    }

    SystemState operator()(const UploadGeneralRecordSp& e) const {
        SystemState next = s;
        do_upload(next, e.owner, e.record, RecordCategory::General);
        return next;
    }

    SystemState operator()(const UploadRestrictedRecordSp& e) const {
        SystemState next = s;
        do_upload(next, e.owner, e.record, RecordCategory::Restricted);
        return next;
    }

    SystemState operator()(const AddNominatedGeneral& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.general_nominated.insert_pair(e.nominee, space);
        for (Id r : s.records_of_space(space)) {
            if (!s.general_records.contains(r)) continue;
            next.general_nominated_access.insert_pair(e.nominee, r);
            next.restricted_nominated_access.insert_pair(e.nominee, r);
        }
        return next;
    }

    SystemState operator()(const AddNominatedRestricted& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.restricted_nominated.insert_pair(e.nominee, space);
        for (Id r : s.records_of_space(space))
            if (s.general_records.contains(r) || s.restricted_records.contains(r))
                next.restricted_nominated_access.insert_pair(e.nominee, r);
        return next;
    }

    SystemState operator()(const GrantFullAccessNominated& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.restricted_nominated.insert_pair(e.nominee, space);
        next.full_access_nominated.insert_pair(e.nominee, space);
        IdSet visible = set_union(s.general_records, s.restricted_records);
        IdSet in_space =
            dom(domain_restrict(visible, range_restrict(s.records_mhr, IdSet{{space}})));
        next.restricted_nominated_access = set_union(
            next.restricted_nominated_access, cartesian_product(IdSet{{e.nominee}}, in_space));
        return next;
    }

    SystemState operator()(const RemoveNominated& e) const {
        SystemState next = s;
        Id space = s.owned_space(e.owner);
        next.general_nominated.erase_pair(e.nominee, space);
        next.restricted_nominated.erase_pair(e.nominee, space);
        next.full_access_nominated.erase_pair(e.nominee, space);
        for (Id r : s.records_of_space(space)) {
            next.general_nominated_access.erase_pair(e.nominee, r);
            next.restricted_nominated_access.erase_pair(e.nominee, r);
        }
        return next;
    }

    SystemState operator()(const UploadGeneralRecordNominated& e) const {
        SystemState next = s;
        do_upload(next, e.owner, e.record, RecordCategory::General);
        return next;
    }

    SystemState operator()(const UploadRestrictedRecordNominated& e) const {
        SystemState next = s;
        do_upload(next, e.owner, e.record, RecordCategory::Restricted);
        return next;
    }

    SystemState operator()(const AssignAuthorisedRep& e) const {
        SystemState next = s;
        next.authorised_rep.insert_pair(e.representative, s.owned_space(e.owner));
        return next;
    }

    SystemState operator()(const RemoveAuthorisedRep& e) const {
        SystemState next = s;
        next.authorised_rep.erase_pair(e.representative, s.owned_space(e.owner));
        return next;
    }
};

} // namespace

ApplyResult apply_event(const SystemState& s, const Event& e, Mutant mutant) {
    validate_event(s.universe, e);
    if (GuardFail f = first_failing_guard(s, e, mutant))
        return {s, GuardError{std::string(event_name(e)), f.label, f.phrase}};
    return {std::visit(Execute{s, mutant}, e), std::nullopt};
}

SystemState replay(const Trace& t, Mutant mutant) {
    SystemState state = t.initial;
    std::size_t step_no = 0;
    for (const TraceStep& step : t.steps) {
        ++step_no;
        ApplyResult result = apply_event(state, step.event, mutant);
        bool expect_applied = !step.rejection.has_value();
        if (result.applied() != expect_applied)
            throw ReplayDivergence("step " + std::to_string(step_no) + " (" +
                                   event_line(step.event, state.universe) + "): recorded " +
                                   (expect_applied ? "applied" : "rejected") + ", replay got " +
                                   (result.applied() ? "applied" : "rejected"));
        if (!result.applied() && result.rejection->guard != step.rejection->guard)
            throw ReplayDivergence("step " + std::to_string(step_no) + ": recorded guard " +
                                   step.rejection->guard + ", replay failed on " +
                                   result.rejection->guard);
        state = std::move(result.state);
    }
    return state;
}

} // namespace mhr
