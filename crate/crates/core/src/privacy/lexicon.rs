use super::Role;

// Categories of sensitive personal data under LGPD Art. 5, in English and
// Portuguese (with and without accents).
const LGPD_TERMS: &[&str] = &[
    // racial or ethnic origin
    "race", "racial", "raca", "raça", "ethnic", "etnia", "etnic", "étnic",
    // religious belief
    "religio", "religiã", "religiao", "crenca", "crença",
    // political opinion
    "politic", "polític",
    // trade union or religious/philosophical/political organization
    "union", "sindica", "filiacao", "filiação",
    // health
    "health", "saude", "saúde", "diagnos", "disease", "doenca", "doença", "icd", "causabas",
    // sexual life
    "sexual",
    // genetic
    "genetic", "genetica", "genétic",
    // biometric
    "biometr",
];

const DIRECT_IDENTIFIERS: &[&str] = &[
    "name", "nome", "full_name", "nome_completo", "cpf", "rg", "cns", "cnh", "nis", "pis", "passport",
    "passaporte", "document", "documento", "email", "e-mail", "phone", "telefone", "celular",
];

/// Sensitive-attribute terms matched as case-insensitive substrings of
/// attribute names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    terms: Vec<String>,
    identifiers: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::lgpd_default()
    }
}

impl Lexicon {
    pub fn lgpd_default() -> Self {
        Lexicon {
            terms: LGPD_TERMS.iter().map(|t| t.to_string()).collect(),
            identifiers: DIRECT_IDENTIFIERS.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn new(terms: impl IntoIterator<Item = String>) -> Self {
        Lexicon {
            terms: terms.into_iter().map(|t| t.to_lowercase()).collect(),
            identifiers: DIRECT_IDENTIFIERS.iter().map(|t| t.to_string()).collect(),
        }
    }

    /// One term per line; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        )
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn classify(&self, name: &str) -> Role {
        let lower = name.trim().to_lowercase();
        if self.identifiers.contains(&lower) {
            Role::Identifier
        } else if self.terms.iter().any(|t| lower.contains(t.as_str())) {
            Role::Sensitive
        } else {
            Role::QuasiIdentifier
        }
    }
}

/// Suggests a role per attribute name. Callers may override the result.
pub fn classify_attributes(names: &[&str], lexicon: &Lexicon) -> Vec<Role> {
    names.iter().map(|n| lexicon.classify(n)).collect()
}
