"""Analysis variables computed on cohort records: diagnostic classification,
region of residence, and the categorical recodes.

Every rule shares one guard semantics, implemented once: guards evaluate in
order, a guard that compares against a missing value never matches, and the
first match wins. Category labels are the canonical Portuguese strings used
downstream; code dictionaries carry the translations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigurationError
from .schema import CohortRecord, FIELD_BY_NAME

SIM = "sim"
NAO = "não"


@dataclass(frozen=True)
class PatternSet:
    """Uppercase substring alternatives; a missing subject never matches."""

    substrings: tuple[str, ...]

    def matches(self, subject: str | None) -> bool:
        if not subject:
            return False
        subject = subject.upper()
        return any(s in subject for s in self.substrings)


# Kept verbatim, typo catchers included, so matches are auditable against
# the field notes. The antigen set ends in CONA where the RT-PCR set has CIVID.
PCR_TEXT_PATTERNS = PatternSet(("SARS", "COVID", "COV", "CORONA", "CIVID"))
ANTIGEN_TEXT_PATTERNS = PatternSet(("SARS", "COVID", "COV", "CORONA", "CONA"))


def detect_pcr_positive(pcr_sars2: int | None, ds_pcr_out: str | None) -> str:
    """COVID-19 evidence by RT-PCR: the positive flag, or an "other result"
    text naming the virus."""
    if pcr_sars2 == 1 or PCR_TEXT_PATTERNS.matches(ds_pcr_out):
        return SIM
    return NAO


def detect_antigen_positive(an_sars2: int | None, ds_an_out: str | None) -> str:
    if an_sars2 == 1 or ANTIGEN_TEXT_PATTERNS.matches(ds_an_out):
        return SIM
    return NAO


def detect_serology_positive(
    res_igg: int | None, res_igm: int | None, res_iga: int | None
) -> str:
    """Missing serology results count as 0, then any positive makes "sim"."""
    igg = 0 if res_igg is None else res_igg
    igm = 0 if res_igm is None else res_igm
    iga = 0 if res_iga is None else res_iga
    return SIM if igg == 1 or igm == 1 or iga == 1 else NAO


def classify_covid_diagnosis(
    classi_fin: int | None, pcr: str, antigen: str, serology: str
) -> str:
    """Diagnostic basis for SARI-by-COVID cases, precedence
    RT-PCR > antigen > serology. Non-COVID SARI is "não"; anything left over
    (including missing CLASSI_FIN) is "outro"."""
    if classi_fin == 5 and pcr == SIM:
        return "pcr"
    if classi_fin == 5 and pcr == NAO and antigen == SIM:
        return "antigenio"
    if classi_fin == 5 and serology == SIM and antigen == NAO and pcr == NAO:
        return "sorologia"
    if classi_fin is not None and classi_fin != 5:
        return NAO
    return "outro"


_REGIONS: dict[str, tuple[str, ...]] = {
    "southeast": ("SP", "RJ", "ES", "MG"),
    "south": ("PR", "SC", "RS"),
    "central": ("GO", "MT", "MS", "DF"),
    "northeast": ("AL", "BA", "CE", "MA", "PB", "PE", "PI", "RN", "SE"),
    "north": ("AC", "AP", "AM", "PA", "RO", "RR", "TO"),
}

REGION_BY_STATE: dict[str, str] = {
    state: region for region, states in _REGIONS.items() for state in states
}

REGION_UNKNOWN = "unknown"

#: Region labels in output significance order (unknown last).
REGION_LABELS: tuple[str, ...] = (
    "southeast",
    "south",
    "central",
    "northeast",
    "north",
    REGION_UNKNOWN,
)


def map_region(sg_uf: str | None) -> str:
    """Five macro-regions of Brazil; missing state is "unknown". The source
    rule's final branch sends any unrecognized token to "north"; replicated,
    but callers should count such tokens (see is_fallback_state)."""
    if sg_uf is None:
        return REGION_UNKNOWN
    return REGION_BY_STATE.get(sg_uf, "north")


def is_fallback_state(sg_uf: str | None) -> bool:
    """True when map_region only lands on "north" via the fallback branch."""
    return sg_uf is not None and sg_uf not in REGION_BY_STATE


@dataclass(frozen=True)
class Guard:
    """One ordered guard of a recode rule. ``op`` is eq/le/ge/between."""

    op: str
    value: int | tuple[int, int]

    def matches(self, subject) -> bool:
        if subject is None:
            return False
        if self.op == "eq":
            return subject == self.value
        if self.op == "le":
            return subject <= self.value
        if self.op == "ge":
            return subject >= self.value
        lo, hi = self.value
        return lo <= subject <= hi

    def describe(self) -> str:
        if self.op == "eq":
            return f"== {self.value}"
        if self.op == "le":
            return f"<= {self.value}"
        if self.op == "ge":
            return f">= {self.value}"
        return f"in {self.value[0]}..{self.value[1]}"


@dataclass(frozen=True)
class RecodeRule:
    """Ordered (guard -> label) list over one source field, with a default
    output (None = missing)."""

    source: str
    guards: tuple[tuple[Guard, str], ...]
    default: str | None = None

    def apply(self, value) -> str | None:
        for guard, label in self.guards:
            if guard.matches(value):
                return label
        return self.default


def _eq_rule(source: str, mapping: dict[int, str]) -> RecodeRule:
    return RecodeRule(
        source=source,
        guards=tuple((Guard("eq", code), label) for code, label in mapping.items()),
    )


def _yes_no_rule(source: str) -> RecodeRule:
    return _eq_rule(source, {1: SIM, 2: NAO})


#: The shipped ruleset: derived variable name -> rule. Multi-field variables
#: (diagnosis, region, municipality change) are separate functions above.
RECODE_RULES: dict[str, RecodeRule] = {
    "raca": _eq_rule(
        "CS_RACA",
        {1: "branca", 2: "preta", 3: "amarela", 4: "parda", 5: "indigena"},
    ),
    "escol": _eq_rule(
        "CS_ESCOL_N",
        {0: "sem escol", 1: "fund1", 2: "fund2", 3: "medio", 4: "superior"},
    ),
    "faixa_et": RecodeRule(
        source="NU_IDADE_N",
        guards=(
            (Guard("le", 19), "<20"),
            (Guard("between", (20, 34)), "20-34"),
            (Guard("ge", 35), ">=35"),
        ),
    ),
    "hospital": _yes_no_rule("HOSPITAL"),
    "hist_viagem": _yes_no_rule("HISTO_VGM"),
    "sg_para_srag": _yes_no_rule("SURTO_SG"),
    "inf_inter": _yes_no_rule("NOSOCOMIAL"),
    "cont_ave_suino": _yes_no_rule("AVE_SUINO"),
    "vacina": _yes_no_rule("VACINA"),
    "antiviral": _eq_rule("ANTIVIRAL", {1: "Oseltamivir", 2: "Zanamivir"}),
    "zona": _eq_rule("CS_ZONA", {1: "urbana", 2: "rural", 3: "periurbana"}),
    "febre": _yes_no_rule("FEBRE"),
    "tosse": _yes_no_rule("TOSSE"),
    "garganta": _yes_no_rule("GARGANTA"),
    "dispneia": _yes_no_rule("DISPNEIA"),
    "desc_resp": _yes_no_rule("DESC_RESP"),
    "saturacao": _yes_no_rule("SATURACAO"),
    "diarreia": _yes_no_rule("DIARREIA"),
    "vomito": _yes_no_rule("VOMITO"),
    "dor_abd": _yes_no_rule("DOR_ABD"),
    "fadiga": _yes_no_rule("FADIGA"),
    "perd_olft": _yes_no_rule("PERD_OLFT"),
    "perd_pala": _yes_no_rule("PERD_PALA"),
    "cardiopati": _yes_no_rule("CARDIOPATI"),
    "hematologi": _yes_no_rule("HEMATOLOGI"),
    "hepatica": _yes_no_rule("HEPATICA"),
    "asma": _yes_no_rule("ASMA"),
    "diabetes": _yes_no_rule("DIABETES"),
    "neuro": _yes_no_rule("NEUROLOGIC"),
    "pneumopati": _yes_no_rule("PNEUMOPATI"),
    "imunodepre": _yes_no_rule("IMUNODEPRE"),
    "renal": _yes_no_rule("RENAL"),
    "obesidade": _yes_no_rule("OBESIDADE"),
    "uti": _yes_no_rule("UTI"),
    "suport_ven": _eq_rule(
        "SUPORT_VEN", {1: "invasivo", 2: "não invasivo", 3: NAO}
    ),
    "evolucao": _eq_rule("EVOLUCAO", {1: "Cura", 2: "Obito", 3: "Obito"}),
}

for _var, _rule in RECODE_RULES.items():
    if _rule.source not in FIELD_BY_NAME:  # pragma: no cover - import-time guard
        raise ConfigurationError(
            f"recode rule {_var} reads unknown field {_rule.source}"
        )


def apply_recode(rule: RecodeRule, cohort_record: CohortRecord) -> str | None:
    """Evaluate one rule against a cohort record's raw field."""
    try:
        value = getattr(cohort_record.record, rule.source)
    except AttributeError:
        raise ConfigurationError(
            f"recode rule reads unknown field {rule.source!r}"
        ) from None
    return rule.apply(value)


def derive_municipality_change(
    co_mun_res: int | None, co_mu_inte: int | None
) -> str | None:
    """Whether hospitalization happened outside the municipality of
    residence; missing if either code is absent."""
    if co_mun_res is None or co_mu_inte is None:
        return None
    return NAO if co_mun_res == co_mu_inte else SIM


def derive_all(cohort_record: CohortRecord) -> CohortRecord:
    """Return a fully populated copy: diagnostics, region, and every recode.

    Pure: the input record is not mutated and identical inputs produce
    identical outputs.
    """
    raw = cohort_record.record
    pcr = detect_pcr_positive(raw.PCR_SARS2, raw.DS_PCR_OUT)
    serology = detect_serology_positive(raw.RES_IGG, raw.RES_IGM, raw.RES_IGA)
    antigen = detect_antigen_positive(raw.AN_SARS2, raw.DS_AN_OUT)
    derived: dict[str, str | None] = {
        "pcr_SN": pcr,
        "sorologia_SN": serology,
        "antigeno_SN": antigen,
        "classi_covid": classify_covid_diagnosis(
            raw.CLASSI_FIN, pcr, antigen, serology
        ),
        "region": map_region(raw.SG_UF),
        "mudou_muni": derive_municipality_change(raw.CO_MUN_RES, raw.CO_MU_INTE),
    }
    for var, rule in RECODE_RULES.items():
        derived[var] = rule.apply(getattr(raw, rule.source))
    return replace(cohort_record, **derived)


def rules_manifest_text() -> str:
    """Human-readable dump of the shipped ruleset for review: variable,
    source field, guards in order, default."""
    lines = []
    for var, rule in RECODE_RULES.items():
        lines.append(f"{var}  <-  {rule.source}")
        for guard, label in rule.guards:
            lines.append(f"    {guard.describe():<14} -> {label}")
        lines.append(f"    otherwise      -> {rule.default or '<missing>'}")
        lines.append("")
    lines.append("pcr_SN  <-  PCR_SARS2, DS_PCR_OUT")
    lines.append("    PCR_SARS2 == 1 or DS_PCR_OUT contains any of "
                 + "|".join(PCR_TEXT_PATTERNS.substrings) + " -> sim")
    lines.append("    otherwise      -> não")
    lines.append("")
    lines.append("antigeno_SN  <-  AN_SARS2, DS_AN_OUT")
    lines.append("    AN_SARS2 == 1 or DS_AN_OUT contains any of "
                 + "|".join(ANTIGEN_TEXT_PATTERNS.substrings) + " -> sim")
    lines.append("    otherwise      -> não")
    lines.append("")
    lines.append("sorologia_SN  <-  RES_IGG, RES_IGM, RES_IGA (missing read as 0)")
    lines.append("    any == 1       -> sim")
    lines.append("    otherwise      -> não")
    lines.append("")
    lines.append("classi_covid  <-  CLASSI_FIN, pcr_SN, antigeno_SN, sorologia_SN")
    lines.append("    CLASSI_FIN == 5 and pcr_SN == sim                   -> pcr")
    lines.append("    CLASSI_FIN == 5 and pcr_SN == não and antigeno_SN == sim -> antigenio")
    lines.append("    CLASSI_FIN == 5 and sorologia_SN == sim and antigeno_SN == não and pcr_SN == não -> sorologia")
    lines.append("    CLASSI_FIN present and != 5                        -> não")
    lines.append("    otherwise (incl. missing CLASSI_FIN)               -> outro")
    lines.append("")
    lines.append("region  <-  SG_UF")
    for region, states in _REGIONS.items():
        lines.append(f"    in {', '.join(states)} -> {region}")
    lines.append("    missing        -> unknown")
    lines.append("    any other token -> north (source fallback; audited)")
    lines.append("")
    lines.append("mudou_muni  <-  CO_MUN_RES, CO_MU_INTE")
    lines.append("    both present and equal     -> não")
    lines.append("    both present and different -> sim")
    lines.append("    otherwise                  -> <missing>")
    lines.append("")
    return "\n".join(lines)
