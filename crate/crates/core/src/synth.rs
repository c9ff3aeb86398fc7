//! Synthetic judgement corpus with known labels.
//!
//! Each class has a profile (court, division, case type, jurisdiction digit)
//! and a keyword vocabulary. A document draws its body keywords from the
//! vocabularies of its own classes, except for a `noise` fraction drawn from
//! the other classes. Headings, party names and rulings are realistic enough
//! for the entity detector and the anonymiser to have work to do.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Judgement, LabelAssignment, SubstantiveOrder};
use crate::error::{Error, Result};

struct Profile {
    order: SubstantiveOrder,
    categories: [&'static str; 3],
    court: &'static str,
    division: &'static str,
    case_type: &'static str,
    gin_digit: char,
    keywords: &'static [&'static str],
}

const PROFILES: [Profile; 6] = [
    Profile {
        order: SubstantiveOrder::Social,
        categories: [
            "derecho del trabajo",
            "derecho de la contratacion laboral",
            "derecho relativo al contrato de trabajo",
        ],
        court: "Tribunal Superior de Justicia",
        division: "Sala de lo Social",
        case_type: "Recurso de suplicación",
        gin_digit: '4',
        keywords: &[
            "despido improcedente", "estatuto trabajadores", "salario", "convenio colectivo",
            "jornada laboral", "indemnización", "empresa empleadora", "extinción contrato",
            "antigüedad", "categoría profesional", "horas extraordinarias", "trabajador",
            "readmisión", "salarios tramitación", "contrato temporal", "vacaciones",
            "finiquito", "representantes trabajadores", "modificación sustancial", "nómina",
        ],
    },
    Profile {
        order: SubstantiveOrder::Penal,
        categories: [
            "delitos contra la seguridad colectiva",
            "derecho de danos",
            "derecho de la circulacion",
        ],
        court: "Juzgado de lo Penal",
        division: "Juzgado de lo Penal",
        case_type: "Procedimiento abreviado",
        gin_digit: '2',
        keywords: &[
            "conducción", "tasa alcohol", "alcoholemia", "vehículo a motor", "atestado policial",
            "permiso conducir", "etilómetro", "seguridad vial", "agentes guardia civil",
            "velocidad", "privación derecho", "trabajos beneficio comunidad", "multa",
            "accidente circulación", "lesiones", "acusado", "ministerio fiscal",
            "conducción temeraria", "aire espirado", "responsabilidad civil",
        ],
    },
    Profile {
        order: SubstantiveOrder::Civil,
        categories: [
            "obligaciones y contratos",
            "derecho de consumo",
            "condiciones generales de la contratacion",
        ],
        court: "Audiencia Provincial",
        division: "Sala de lo Civil",
        case_type: "Recurso de apelación",
        gin_digit: '1',
        keywords: &[
            "cláusula suelo", "préstamo hipotecario", "consumidor", "nulidad", "cláusula abusiva",
            "entidad bancaria", "condiciones generales", "transparencia", "restitución cantidades",
            "intereses moratorios", "gastos hipoteca", "control incorporación", "escritura",
            "prestatario", "banco", "tipo interés", "directiva", "buena fe", "información precontractual",
            "comisión apertura",
        ],
    },
    Profile {
        order: SubstantiveOrder::Tributary,
        categories: ["derecho financiero y tributario", "derecho tributario", "derecho de sociedades"],
        court: "Tribunal Superior de Justicia",
        division: "Sala de lo Contencioso-Administrativo",
        case_type: "Recurso contencioso-administrativo",
        gin_digit: '3',
        keywords: &[
            "liquidación tributaria", "impuesto sociedades", "agencia tributaria", "inspección",
            "base imponible", "deducción", "sanción tributaria", "económico administrativo",
            "hacienda pública", "ejercicio fiscal", "cuota tributaria", "iva", "prescripción",
            "obligado tributario", "comprobación", "declaración", "acta inspección",
            "tribunal económico", "gasto deducible", "recargo",
        ],
    },
    Profile {
        order: SubstantiveOrder::Mercantile,
        categories: ["obligaciones/contratos", "derecho de la contratacion", "derecho concursal"],
        court: "Juzgado de lo Mercantil",
        division: "Juzgado de lo Mercantil",
        case_type: "Concurso ordinario",
        gin_digit: '1',
        keywords: &[
            "concurso acreedores", "administración concursal", "masa activa", "crédito concursal",
            "insolvencia", "calificación concurso", "acreedores", "administrador sociedad",
            "junta general", "socios", "capital social", "balance", "liquidación sociedad",
            "créditos contra masa", "plan liquidación", "deudor", "cuentas anuales",
            "responsabilidad administradores", "sociedad mercantil", "convenio acreedores",
        ],
    },
    Profile {
        order: SubstantiveOrder::Administrative,
        categories: ["funcion publica", "derecho administrativo", "procedimiento administrativo"],
        court: "Tribunal Superior de Justicia",
        division: "Sala de lo Contencioso-Administrativo",
        case_type: "Procedimiento ordinario",
        gin_digit: '3',
        keywords: &[
            "funcionario", "administración pública", "acto administrativo", "oposición",
            "proceso selectivo", "complemento destino", "expediente disciplinario", "plaza",
            "concurso méritos", "personal estatutario", "resolución administrativa",
            "silencio administrativo", "interés legítimo", "motivación", "desviación poder",
            "ayuntamiento", "comunidad autónoma", "bases convocatoria", "interino", "trienios",
        ],
    },
];

/// Words every document uses regardless of class.
const FILLER: &[&str] = &[
    "el", "la", "de", "que", "en", "los", "las", "por", "con", "se", "del", "al", "una", "un",
    "parte", "autos", "procede", "resolución", "consta", "recurrida", "instancia", "fundamento",
    "jurisprudencia", "doctrina", "alegaciones", "prueba practicada", "hechos probados",
];

const PROVINCES: &[(&str, &str)] = &[
    ("28079", "Madrid"),
    ("08019", "Barcelona"),
    ("46250", "Valencia"),
    ("41091", "Sevilla"),
    ("48020", "Bilbao"),
    ("50297", "Zaragoza"),
    ("29067", "Málaga"),
    ("15030", "A Coruña"),
];

const FIRST: &[&str] = &[
    "Antonio", "Manuel", "José", "Francisco", "Juan", "Javier", "Carlos", "Miguel", "Pedro",
    "Luis", "María", "Carmen", "Ana", "Isabel", "Laura", "Lucía", "Elena", "Pilar",
];

const SURNAMES: &[&str] = &[
    "García", "Rodríguez", "González", "Fernández", "López", "Martínez", "Sánchez", "Pérez",
    "Gómez", "Martín", "Jiménez", "Ruiz", "Hernández", "Díaz", "Moreno", "Álvarez", "Romero",
    "Navarro", "Torres", "Ramos",
];

const DECISIONS: &[(&str, &str)] = &[
    ("Que debemos desestimar y desestimamos", "desestimatorio"),
    ("Que estimamos", "estimatorio"),
    ("Que estimamos parcialmente", "parcialmente estimatorio"),
];

/// Label-set size proportions of the reference corpus (sizes 1, 2, 3).
pub const SIZE_PROPORTIONS: [f64; 3] = [72182.0 / 106806.0, 27614.0 / 106806.0, 7010.0 / 106806.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_docs: usize,
    /// Label sets as indices into the six class profiles.
    pub combos: Vec<Vec<usize>>,
    /// Fraction of body keywords drawn from classes the document lacks.
    pub noise: f64,
    /// Keywords per document body.
    pub keywords_per_doc: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_docs: 2000,
            combos: vec![vec![0], vec![1], vec![2], vec![3], vec![4], vec![2, 4], vec![3, 4], vec![0, 3, 5]],
            noise: 0.2,
            keywords_per_doc: 60,
            seed: 0,
        }
    }
}

pub fn class_count() -> usize {
    PROFILES.len()
}

pub fn profile_label(class: usize) -> Result<LabelAssignment> {
    let p = PROFILES
        .get(class)
        .ok_or_else(|| Error::Config(format!("synthetic class {class} does not exist (0..{})", PROFILES.len())))?;
    LabelAssignment::new(p.order, p.categories)
}

/// Documents per combination: sizes follow [`SIZE_PROPORTIONS`]
/// (renormalised over the sizes present) and are split evenly between the
/// combinations of each size.
pub fn combo_counts(config: &SynthConfig) -> Result<Vec<usize>> {
    let mut by_size: [Vec<usize>; 3] = Default::default();
    for (i, c) in config.combos.iter().enumerate() {
        if c.is_empty() || c.len() > 3 {
            return Err(Error::Config(format!("combination {i} must have 1 to 3 classes")));
        }
        let mut sorted = c.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != c.len() {
            return Err(Error::Config(format!("combination {i} repeats a class")));
        }
        by_size[c.len() - 1].push(i);
    }
    let weight: f64 = (0..3).filter(|&s| !by_size[s].is_empty()).map(|s| SIZE_PROPORTIONS[s]).sum();
    let mut per_size = [0usize; 3];
    let present: Vec<usize> = (0..3).filter(|&s| !by_size[s].is_empty()).collect();
    let mut assigned = 0;
    for (k, &s) in present.iter().enumerate() {
        per_size[s] = if k + 1 == present.len() {
            config.n_docs - assigned
        } else {
            (config.n_docs as f64 * SIZE_PROPORTIONS[s] / weight).round() as usize
        };
        assigned += per_size[s];
    }
    let mut counts = vec![0; config.combos.len()];
    for s in 0..3 {
        let members = &by_size[s];
        for (k, &i) in members.iter().enumerate() {
            counts[i] = per_size[s] / members.len() + usize::from(k < per_size[s] % members.len());
        }
    }
    Ok(counts)
}

fn person(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {} {}",
        FIRST.choose(rng).expect("names"),
        SURNAMES.choose(rng).expect("surnames"),
        SURNAMES.choose(rng).expect("surnames")
    )
}

fn sentence(rng: &mut ChaCha8Rng, keywords: &mut Vec<&'static str>) -> String {
    let mut words: Vec<&str> = Vec::new();
    let n_kw = rng.gen_range(2..=4).min(keywords.len());
    for _ in 0..n_kw {
        words.push(keywords.pop().expect("keyword"));
        for _ in 0..rng.gen_range(1..=3) {
            words.push(FILLER.choose(rng).expect("filler"));
        }
    }
    let mut s = words.join(" ");
    if let Some(first) = s.get(0..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s + "."
}

fn document(id: usize, classes: &[usize], config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Judgement> {
    let lead = &PROFILES[classes[0]];
    let others: Vec<usize> = (0..PROFILES.len()).filter(|c| !classes.contains(c)).collect();
    let mut keywords: Vec<&'static str> = (0..config.keywords_per_doc)
        .map(|_| {
            let class = if !others.is_empty() && rng.gen_bool(config.noise) {
                *others.choose(rng).expect("other class")
            } else {
                *classes.choose(rng).expect("own class")
            };
            *PROFILES[class].keywords.choose(rng).expect("keywords")
        })
        .collect();

    let (province_code, city) = *PROVINCES.choose(rng).expect("provinces");
    let year = rng.gen_range(2010..=2021);
    let gin = format!(
        "{province_code}{:02}{}{year}{:07}",
        rng.gen_range(1..=99),
        lead.gin_digit,
        rng.gen_range(1..10_000_000u32)
    );
    let case_no = format!("{}/{year}", rng.gen_range(1..2000));
    let judge = person(rng);
    let lawyer = person(rng);
    let attorney = person(rng);
    let company = format!(
        "{} {} S.L.",
        SURNAMES.choose(rng).expect("surnames"),
        ["Servicios", "Inversiones", "Construcciones", "Logística"].choose(rng).expect("trades")
    );
    let (ruling, _) = *DECISIONS.choose(rng).expect("decisions");

    let mut text = String::new();
    text.push_str(&format!(
        "{} de {city}\n{}\n{} núm. {case_no}\nSENTENCIA núm. {}/{year}\n\nEn {city}, a {} de mayo de {year}.\nPonente: el Magistrado D. {judge}.\n\n",
        lead.court,
        lead.division,
        lead.case_type,
        rng.gen_range(1..900),
        rng.gen_range(1..29)
    ));
    text.push_str("ANTECEDENTES DE HECHO\n\n");
    text.push_str(&format!(
        "PRIMERO.- La representación de {company}, asistida por el Letrado D. {lawyer} y el Procurador D. {attorney}, formuló demanda. "
    ));
    let body_sentences = keywords.len() / 3 + 1;
    keywords.shuffle(rng);
    let mut body = Vec::new();
    for _ in 0..body_sentences {
        if keywords.is_empty() {
            break;
        }
        body.push(sentence(rng, &mut keywords));
    }
    let half = body.len() / 2;
    text.push_str(&body[..half].join(" "));
    text.push_str("\n\nFUNDAMENTOS DE DERECHO\n\n");
    text.push_str(&body[half..].join(" "));
    text.push_str(&format!(
        "\n\nFALLAMOS\n\n{ruling} el recurso interpuesto por {company}. Así lo pronunciamos, mandamos y firmamos.\n"
    ));

    let annotations = classes.iter().map(|&c| profile_label(c)).collect::<Result<Vec<_>>>()?;
    Ok(Judgement {
        id: id.to_string(),
        raw_text: text,
        gin: Some(gin),
        annotations,
    })
}

/// Generates the corpus; documents are shuffled and numbered from 1.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    if !(0.0..=1.0).contains(&config.noise) {
        return Err(Error::Config("noise must lie in [0, 1]".into()));
    }
    if config.keywords_per_doc == 0 {
        return Err(Error::Config("keywords_per_doc must be positive".into()));
    }
    for c in config.combos.iter().flatten() {
        profile_label(*c)?;
    }
    let counts = combo_counts(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut plan: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(i, n))
        .collect();
    plan.shuffle(&mut rng);
    let docs = plan
        .iter()
        .enumerate()
        .map(|(k, &combo)| document(k + 1, &config.combos[combo], config, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(docs)
}
