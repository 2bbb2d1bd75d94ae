"""Typed view of the SIVEP-Gripe notification fields the pipeline reads,
plus the code dictionaries for every coded field.

Missing values are represented as ``None`` everywhere. A coded field holds
either a value from its declared domain, a preserved out-of-dictionary code
(e.g. CS_GESTANT = 0), or ``None``; raw codes are never silently coerced.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, fields as dataclass_fields
from typing import Iterable

from .errors import ConfigurationError

# Field kinds drive CSV conversion and the data dictionary.
INT_CODE = "int_code"  # categorical integer code with a dictionary
INT = "int"  # plain integer (age, municipality code)
STR_CODE = "str_code"  # categorical string code (CS_SEXO, SG_UF)
TEXT = "text"  # free text, kept verbatim after trimming
DATE = "date"  # day-precision calendar date


@dataclass(frozen=True, slots=True)
class FieldSpec:
    name: str
    kind: str
    description: str


#: Every source column the pipeline reads, in canonical order. Anything else
#: in a snapshot header passes through untouched via ``extra_fields``.
FIELDS: tuple[FieldSpec, ...] = (
    FieldSpec("DT_SIN_PRI", DATE, "date of first symptoms"),
    FieldSpec("SEM_PRI", INT_CODE, "epidemiological week of first symptoms"),
    FieldSpec("CS_SEXO", STR_CODE, "sex"),
    FieldSpec("NU_IDADE_N", INT, "age in years"),
    FieldSpec("CS_GESTANT", INT_CODE, "gestation code"),
    FieldSpec("PUERPERA", INT_CODE, "puerperium indicator"),
    FieldSpec("CLASSI_FIN", INT_CODE, "final SARI diagnosis"),
    FieldSpec("PCR_SARS2", INT_CODE, "RT-PCR positive for SARS-CoV-2"),
    FieldSpec("DS_PCR_OUT", TEXT, "other RT-PCR result, free text"),
    FieldSpec("AN_SARS2", INT_CODE, "antigen test positive for SARS-CoV-2"),
    FieldSpec("DS_AN_OUT", TEXT, "other antigen result, free text"),
    FieldSpec("RES_IGG", INT_CODE, "serology IgG result"),
    FieldSpec("RES_IGM", INT_CODE, "serology IgM result"),
    FieldSpec("RES_IGA", INT_CODE, "serology IgA result"),
    FieldSpec("SG_UF", STR_CODE, "state of residence"),
    FieldSpec("CO_MUN_RES", INT, "municipality of residence"),
    FieldSpec("CO_MU_INTE", INT, "municipality of hospitalization"),
    FieldSpec("CS_RACA", INT_CODE, "race"),
    FieldSpec("CS_ESCOL_N", INT_CODE, "education"),
    FieldSpec("HOSPITAL", INT_CODE, "hospitalized"),
    FieldSpec("HISTO_VGM", INT_CODE, "international travel history"),
    FieldSpec("SURTO_SG", INT_CODE, "flu syndrome outbreak evolved to SARI"),
    FieldSpec("NOSOCOMIAL", INT_CODE, "hospital-acquired infection"),
    FieldSpec("AVE_SUINO", INT_CODE, "contact with poultry or swine"),
    FieldSpec("VACINA", INT_CODE, "influenza vaccination"),
    FieldSpec("ANTIVIRAL", INT_CODE, "antiviral used"),
    FieldSpec("CS_ZONA", INT_CODE, "residence zone"),
    FieldSpec("FEBRE", INT_CODE, "fever"),
    FieldSpec("TOSSE", INT_CODE, "cough"),
    FieldSpec("GARGANTA", INT_CODE, "sore throat"),
    FieldSpec("DISPNEIA", INT_CODE, "dyspnea"),
    FieldSpec("DESC_RESP", INT_CODE, "respiratory distress"),
    FieldSpec("SATURACAO", INT_CODE, "O2 saturation below 95%"),
    FieldSpec("DIARREIA", INT_CODE, "diarrhea"),
    FieldSpec("VOMITO", INT_CODE, "vomiting"),
    FieldSpec("DOR_ABD", INT_CODE, "abdominal pain"),
    FieldSpec("FADIGA", INT_CODE, "fatigue"),
    FieldSpec("PERD_OLFT", INT_CODE, "loss of smell"),
    FieldSpec("PERD_PALA", INT_CODE, "loss of taste"),
    FieldSpec("CARDIOPATI", INT_CODE, "cardiovascular disease"),
    FieldSpec("HEMATOLOGI", INT_CODE, "hematological disease"),
    FieldSpec("HEPATICA", INT_CODE, "liver disease"),
    FieldSpec("ASMA", INT_CODE, "asthma"),
    FieldSpec("DIABETES", INT_CODE, "diabetes"),
    FieldSpec("NEUROLOGIC", INT_CODE, "neurological disease"),
    FieldSpec("PNEUMOPATI", INT_CODE, "pneumopathy"),
    FieldSpec("IMUNODEPRE", INT_CODE, "immunosuppression"),
    FieldSpec("RENAL", INT_CODE, "kidney disease"),
    FieldSpec("OBESIDADE", INT_CODE, "obesity"),
    FieldSpec("UTI", INT_CODE, "ICU admission"),
    FieldSpec("SUPORT_VEN", INT_CODE, "ventilatory support"),
    FieldSpec("EVOLUCAO", INT_CODE, "case evolution"),
)

FIELD_NAMES: tuple[str, ...] = tuple(f.name for f in FIELDS)
FIELD_BY_NAME: dict[str, FieldSpec] = {f.name: f for f in FIELDS}

#: Columns the pipeline cannot run without; a header missing any is fatal.
REQUIRED_FIELDS: tuple[str, ...] = (
    "DT_SIN_PRI",
    "SEM_PRI",
    "CS_SEXO",
    "NU_IDADE_N",
    "CS_GESTANT",
    "PUERPERA",
)

#: Fields holding categorical codes (subject to code dictionaries and audit).
CODED_FIELDS: tuple[str, ...] = tuple(
    f.name for f in FIELDS if f.kind in (INT_CODE, STR_CODE)
)


@dataclass(slots=True)
class SurveillanceRecord:
    """One notification row. Field order matches ``FIELDS``; positional
    construction is relied on by the ingest converter."""

    DT_SIN_PRI: dt.date | None = None
    SEM_PRI: int | None = None
    CS_SEXO: str | None = None
    NU_IDADE_N: int | None = None
    CS_GESTANT: int | None = None
    PUERPERA: int | None = None
    CLASSI_FIN: int | None = None
    PCR_SARS2: int | None = None
    DS_PCR_OUT: str | None = None
    AN_SARS2: int | None = None
    DS_AN_OUT: str | None = None
    RES_IGG: int | None = None
    RES_IGM: int | None = None
    RES_IGA: int | None = None
    SG_UF: str | None = None
    CO_MUN_RES: int | None = None
    CO_MU_INTE: int | None = None
    CS_RACA: int | None = None
    CS_ESCOL_N: int | None = None
    HOSPITAL: int | None = None
    HISTO_VGM: int | None = None
    SURTO_SG: int | None = None
    NOSOCOMIAL: int | None = None
    AVE_SUINO: int | None = None
    VACINA: int | None = None
    ANTIVIRAL: int | None = None
    CS_ZONA: int | None = None
    FEBRE: int | None = None
    TOSSE: int | None = None
    GARGANTA: int | None = None
    DISPNEIA: int | None = None
    DESC_RESP: int | None = None
    SATURACAO: int | None = None
    DIARREIA: int | None = None
    VOMITO: int | None = None
    DOR_ABD: int | None = None
    FADIGA: int | None = None
    PERD_OLFT: int | None = None
    PERD_PALA: int | None = None
    CARDIOPATI: int | None = None
    HEMATOLOGI: int | None = None
    HEPATICA: int | None = None
    ASMA: int | None = None
    DIABETES: int | None = None
    NEUROLOGIC: int | None = None
    PNEUMOPATI: int | None = None
    IMUNODEPRE: int | None = None
    RENAL: int | None = None
    OBESIDADE: int | None = None
    UTI: int | None = None
    SUPORT_VEN: int | None = None
    EVOLUCAO: int | None = None
    extra_fields: dict[str, str] = field(default_factory=dict)


# Sanity: the dataclass must stay aligned with the registry.
_record_fields = tuple(
    f.name for f in dataclass_fields(SurveillanceRecord) if f.name != "extra_fields"
)
if _record_fields != FIELD_NAMES:  # pragma: no cover - import-time guard
    raise RuntimeError("SurveillanceRecord fields out of sync with FIELDS registry")


@dataclass(slots=True, frozen=True)
class EpiStamp:
    """Epidemiological (year, week) position of a record.

    ``ano`` is the calendar year of the symptom-onset date, ``sem`` is the
    notified SEM_PRI week. Either may be absent; a stamp is only produced at
    all when the onset date parsed. After the week-53 correction no stamp is
    (2021, 53).
    """

    ano: int | None
    sem: int | None


#: Derived variable names in output order (the order they are computed).
DERIVED_FIELDS: tuple[str, ...] = (
    "classi_gesta_puerp",
    "pcr_SN",
    "sorologia_SN",
    "antigeno_SN",
    "classi_covid",
    "region",
    "raca",
    "escol",
    "faixa_et",
    "hospital",
    "hist_viagem",
    "sg_para_srag",
    "inf_inter",
    "cont_ave_suino",
    "vacina",
    "antiviral",
    "zona",
    "mudou_muni",
    "febre",
    "tosse",
    "garganta",
    "dispneia",
    "desc_resp",
    "saturacao",
    "diarreia",
    "vomito",
    "dor_abd",
    "fadiga",
    "perd_olft",
    "perd_pala",
    "cardiopati",
    "hematologi",
    "hepatica",
    "asma",
    "diabetes",
    "neuro",
    "pneumopati",
    "imunodepre",
    "renal",
    "obesidade",
    "uti",
    "suport_ven",
    "evolucao",
)


@dataclass(slots=True)
class CohortRecord:
    """A selected obstetric case: the raw record plus every derived variable.

    ``classi_gesta_puerp`` is set at cohort selection; the remaining derived
    fields are filled by ``derive.derive_all``.
    """

    record: SurveillanceRecord
    classi_gesta_puerp: str | None = None
    pcr_SN: str | None = None
    sorologia_SN: str | None = None
    antigeno_SN: str | None = None
    classi_covid: str | None = None
    region: str | None = None
    raca: str | None = None
    escol: str | None = None
    faixa_et: str | None = None
    hospital: str | None = None
    hist_viagem: str | None = None
    sg_para_srag: str | None = None
    inf_inter: str | None = None
    cont_ave_suino: str | None = None
    vacina: str | None = None
    antiviral: str | None = None
    zona: str | None = None
    mudou_muni: str | None = None
    febre: str | None = None
    tosse: str | None = None
    garganta: str | None = None
    dispneia: str | None = None
    desc_resp: str | None = None
    saturacao: str | None = None
    diarreia: str | None = None
    vomito: str | None = None
    dor_abd: str | None = None
    fadiga: str | None = None
    perd_olft: str | None = None
    perd_pala: str | None = None
    cardiopati: str | None = None
    hematologi: str | None = None
    hepatica: str | None = None
    asma: str | None = None
    diabetes: str | None = None
    neuro: str | None = None
    pneumopati: str | None = None
    imunodepre: str | None = None
    renal: str | None = None
    obesidade: str | None = None
    uti: str | None = None
    suport_ven: str | None = None
    evolucao: str | None = None


_cohort_fields = tuple(
    f.name for f in dataclass_fields(CohortRecord) if f.name != "record"
)
if _cohort_fields != DERIVED_FIELDS:  # pragma: no cover - import-time guard
    raise RuntimeError("CohortRecord fields out of sync with DERIVED_FIELDS")


class _OutOfDictionary:
    """Marker returned when a code exists in the data but not in the official
    dictionary (e.g. CS_GESTANT = 0)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OUT_OF_DICTIONARY"


OUT_OF_DICTIONARY = _OutOfDictionary()


@dataclass(frozen=True)
class CodeBookEntry:
    """Dictionary rows for one coded field.

    ``codes`` maps raw code to (label, translation); translation is None when
    the canonical label already is English. ``known_undocumented`` lists codes
    that occur in real snapshots without a dictionary entry. ``open_domain``
    marks fields whose full code list is not modeled; undeclared codes there
    still resolve to OUT_OF_DICTIONARY but are not audited. ``int_range``
    declares a numeric domain instead of an enumerated one.
    """

    codes: dict[int | str, tuple[str, str | None]] | None = None
    known_undocumented: frozenset = frozenset()
    open_domain: bool = False
    int_range: tuple[int, int] | None = None

    def in_domain(self, code) -> bool:
        if self.int_range is not None:
            return isinstance(code, int) and self.int_range[0] <= code <= self.int_range[1]
        return self.codes is not None and code in self.codes


def _yes_no_ignored() -> dict[int, tuple[str, str | None]]:
    return {1: ("sim", "yes"), 2: ("não", "no"), 9: ("ignorado", "ignored")}


_CODEBOOK_DATA: dict[str, CodeBookEntry] = {
    "SEM_PRI": CodeBookEntry(int_range=(1, 53)),
    "CS_SEXO": CodeBookEntry(
        codes={"F": ("female", None), "M": ("male", None), "I": ("ignored", None)}
    ),
    "CS_GESTANT": CodeBookEntry(
        codes={
            1: ("1st trimester", None),
            2: ("2nd trimester", None),
            3: ("3rd trimester", None),
            4: ("Ignored Gestational Age", None),
            5: ("No", None),
            6: ("Does not apply", None),
            9: ("Ignored", None),
        },
        known_undocumented=frozenset({0}),
    ),
    "PUERPERA": CodeBookEntry(codes=_yes_no_ignored()),
    "CLASSI_FIN": CodeBookEntry(
        codes={
            1: ("SARI by influenza", None),
            2: ("SARI by another respiratory virus", None),
            3: ("SARI by another etiologic agent", None),
            4: ("SARI not specified", None),
            5: ("SARI by COVID-19", None),
        }
    ),
    "PCR_SARS2": CodeBookEntry(codes={1: ("positivo", "positive")}, open_domain=True),
    "AN_SARS2": CodeBookEntry(codes={1: ("positivo", "positive")}, open_domain=True),
    "RES_IGG": CodeBookEntry(codes={1: ("positivo", "positive")}, open_domain=True),
    "RES_IGM": CodeBookEntry(codes={1: ("positivo", "positive")}, open_domain=True),
    "RES_IGA": CodeBookEntry(codes={1: ("positivo", "positive")}, open_domain=True),
    "SG_UF": CodeBookEntry(
        codes={
            "AC": ("Acre", None),
            "AL": ("Alagoas", None),
            "AP": ("Amapá", None),
            "AM": ("Amazonas", None),
            "BA": ("Bahia", None),
            "CE": ("Ceará", None),
            "DF": ("Distrito Federal", None),
            "ES": ("Espírito Santo", None),
            "GO": ("Goiás", None),
            "MA": ("Maranhão", None),
            "MT": ("Mato Grosso", None),
            "MS": ("Mato Grosso do Sul", None),
            "MG": ("Minas Gerais", None),
            "PA": ("Pará", None),
            "PB": ("Paraíba", None),
            "PR": ("Paraná", None),
            "PE": ("Pernambuco", None),
            "PI": ("Piauí", None),
            "RJ": ("Rio de Janeiro", None),
            "RN": ("Rio Grande do Norte", None),
            "RS": ("Rio Grande do Sul", None),
            "RO": ("Rondônia", None),
            "RR": ("Roraima", None),
            "SC": ("Santa Catarina", None),
            "SP": ("São Paulo", None),
            "SE": ("Sergipe", None),
            "TO": ("Tocantins", None),
        }
    ),
    "CS_RACA": CodeBookEntry(
        codes={
            1: ("branca", "white"),
            2: ("preta", "black"),
            3: ("amarela", "yellow"),
            4: ("parda", "brown"),
            5: ("indigena", "indigenous"),
            9: ("ignorado", "ignored"),
        }
    ),
    "CS_ESCOL_N": CodeBookEntry(
        codes={
            0: ("sem escol", "no schooling"),
            1: ("fund1", "1st elementary school"),
            2: ("fund2", "2nd elementary school"),
            3: ("medio", "high school"),
            4: ("superior", "university education"),
            9: ("ignorado", "ignored"),
        }
    ),
    "HOSPITAL": CodeBookEntry(codes=_yes_no_ignored()),
    "HISTO_VGM": CodeBookEntry(codes=_yes_no_ignored()),
    "SURTO_SG": CodeBookEntry(codes=_yes_no_ignored()),
    "NOSOCOMIAL": CodeBookEntry(codes=_yes_no_ignored()),
    "AVE_SUINO": CodeBookEntry(codes=_yes_no_ignored()),
    "VACINA": CodeBookEntry(codes=_yes_no_ignored()),
    "ANTIVIRAL": CodeBookEntry(
        codes={1: ("Oseltamivir", None), 2: ("Zanamivir", None)}, open_domain=True
    ),
    "CS_ZONA": CodeBookEntry(
        codes={
            1: ("urbana", "urban"),
            2: ("rural", "rural"),
            3: ("periurbana", "periurban"),
            9: ("ignorado", "ignored"),
        }
    ),
    "UTI": CodeBookEntry(codes=_yes_no_ignored()),
    "SUPORT_VEN": CodeBookEntry(
        codes={
            1: ("invasivo", "invasive"),
            2: ("não invasivo", "non-invasive"),
            3: ("não", "no"),
            9: ("ignorado", "ignored"),
        }
    ),
    # EVOLUCAO 3 keeps the source dictionary's distinct label so that
    # label -> code round-trips; the analysis recode folds 2 and 3 together.
    "EVOLUCAO": CodeBookEntry(
        codes={
            1: ("Cura", "cure"),
            2: ("Obito", "death"),
            3: ("Obito por outras causas", "death from other causes"),
            9: ("ignorado", "ignored"),
        }
    ),
}

# Symptom and comorbidity indicators all share the yes/no/ignored dictionary.
for _name in (
    "FEBRE",
    "TOSSE",
    "GARGANTA",
    "DISPNEIA",
    "DESC_RESP",
    "SATURACAO",
    "DIARREIA",
    "VOMITO",
    "DOR_ABD",
    "FADIGA",
    "PERD_OLFT",
    "PERD_PALA",
    "CARDIOPATI",
    "HEMATOLOGI",
    "HEPATICA",
    "ASMA",
    "DIABETES",
    "NEUROLOGIC",
    "PNEUMOPATI",
    "IMUNODEPRE",
    "RENAL",
    "OBESIDADE",
):
    _CODEBOOK_DATA[_name] = CodeBookEntry(codes=_yes_no_ignored())


class CodeBook:
    """Immutable lookup of raw codes to category labels, one table per coded
    field. Safe for concurrent reads."""

    def __init__(self, entries: dict[str, CodeBookEntry]):
        self._entries = dict(entries)
        self._reverse: dict[str, dict[str, int | str]] = {}
        for name, entry in self._entries.items():
            if entry.codes:
                rev = {}
                for code, (label, _tr) in entry.codes.items():
                    if label in rev:
                        raise ConfigurationError(
                            f"duplicate label {label!r} in codebook field {name}"
                        )
                    rev[label] = code
                self._reverse[name] = rev

    def fields(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def entry(self, field_name: str) -> CodeBookEntry:
        try:
            return self._entries[field_name]
        except KeyError:
            raise ConfigurationError(
                f"field {field_name!r} is not declared in the code book"
            ) from None

    def lookup(self, field_name: str, code):
        """Resolve a raw code: label for dictionary codes, OUT_OF_DICTIONARY
        for undeclared ones, None for missing input."""
        entry = self.entry(field_name)
        if code is None:
            return None
        if entry.int_range is not None:
            return str(code) if entry.in_domain(code) else OUT_OF_DICTIONARY
        hit = entry.codes.get(code) if entry.codes else None
        return hit[0] if hit is not None else OUT_OF_DICTIONARY

    def reverse_lookup(self, field_name: str, label: str):
        self.entry(field_name)
        rev = self._reverse.get(field_name, {})
        if label not in rev:
            raise ConfigurationError(
                f"label {label!r} not found for field {field_name}"
            )
        return rev[label]

    def is_documented(self, field_name: str, code) -> bool:
        return self.entry(field_name).in_domain(code)

    def check_covers(self, field_names: Iterable[str]) -> None:
        """Startup guard: every coded field the pipeline reads must have a
        dictionary entry."""
        missing = [n for n in field_names if n not in self._entries]
        if missing:
            raise ConfigurationError(
                "code book is missing entries for: " + ", ".join(sorted(missing))
            )

    def export_text(self) -> str:
        """Human-readable data dictionary, one table per field."""
        out = []
        for name in self._entries:
            entry = self._entries[name]
            spec = FIELD_BY_NAME.get(name)
            title = f"{name}: {spec.description}" if spec else name
            out.append(title)
            out.append("-" * len(title))
            if entry.int_range is not None:
                lo, hi = entry.int_range
                out.append(f"  integer range {lo}..{hi}")
            else:
                width = max(len(str(c)) for c in entry.codes)
                for code, (label, tr) in entry.codes.items():
                    line = f"  {str(code):>{width}}  {label}"
                    if tr:
                        line += f"  ({tr})"
                    out.append(line)
            if entry.known_undocumented:
                codes = ", ".join(str(c) for c in sorted(entry.known_undocumented))
                out.append(f"  out-of-dictionary codes seen in the wild: {codes}")
            if entry.open_domain:
                out.append("  (open domain: other codes exist and are tolerated)")
            out.append("")
        return "\n".join(out)

    def export_json_obj(self) -> dict:
        obj = {}
        for name, entry in self._entries.items():
            rec: dict = {}
            if entry.int_range is not None:
                rec["int_range"] = list(entry.int_range)
            else:
                rec["codes"] = [
                    {"code": code, "label": label, "translation": tr}
                    for code, (label, tr) in entry.codes.items()
                ]
            if entry.known_undocumented:
                rec["known_undocumented"] = sorted(entry.known_undocumented)
            if entry.open_domain:
                rec["open_domain"] = True
            obj[name] = rec
        return obj


DEFAULT_CODEBOOK = CodeBook(_CODEBOOK_DATA)
DEFAULT_CODEBOOK.check_covers(CODED_FIELDS)


def codebook_lookup(field_name: str, code, codebook: CodeBook = DEFAULT_CODEBOOK):
    """Module-level convenience over the default code book."""
    return codebook.lookup(field_name, code)
