use thiserror::Error;

#[derive(Debug, Error)]
pub enum PageGraphError {
    #[error("unreadable PDF: {0}")]
    UnreadablePdf(String),
    #[error("PDF is encrypted")]
    EncryptedPdf,
    #[error("document has no text layer")]
    NoTextLayer,
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("unknown region category `{0}`")]
    UnknownCategory(String),
    #[error("region {index} refers to page {page}, document has {pages}")]
    PageOutOfRange { index: usize, page: usize, pages: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum RefItemsError {
    #[error("no references section title found")]
    SectionNotFound,
    #[error("no reference item start markers found in the references section")]
    NoItemsFound,
}

#[derive(Debug, Error, PartialEq)]
pub enum LinksError {
    #[error("no reference item has a box on target page {0}")]
    Unresolvable(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("references section has no list regions")]
    EmptySection,
    #[error("split ratio {0} outside (0, 1)")]
    InvalidRatio(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("bibliography needs {needed} pages, budget is {budget}")]
    Overflow { needed: usize, budget: usize },
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("invalid input at `{path}`: {message}")]
    InvalidInput { path: String, message: String },
}

/// Crate-level error; [`Error::code`] gives the module-qualified code.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    PageGraph(#[from] PageGraphError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    RefItems(#[from] RefItemsError),
    #[error(transparent)]
    Links(#[from] LinksError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::PageGraph(e) => match e {
                PageGraphError::UnreadablePdf(_) => "pagegraph.UnreadablePdf",
                PageGraphError::EncryptedPdf => "pagegraph.EncryptedPdf",
                PageGraphError::NoTextLayer => "pagegraph.NoTextLayer",
                PageGraphError::SchemaViolation { .. } => "pagegraph.SchemaViolation",
                PageGraphError::Io(_) => "pagegraph.Io",
            },
            Error::Layout(e) => match e {
                LayoutError::SchemaViolation { .. } => "layout.SchemaViolation",
                LayoutError::UnknownCategory(_) => "layout.UnknownCategory",
                LayoutError::PageOutOfRange { .. } => "layout.PageOutOfRange",
            },
            Error::RefItems(e) => match e {
                RefItemsError::SectionNotFound => "refitems.SectionNotFound",
                RefItemsError::NoItemsFound => "refitems.NoItemsFound",
            },
            Error::Links(LinksError::Unresolvable(_)) => "links.Unresolvable",
            Error::Dataset(e) => match e {
                DatasetError::EmptySection => "dataset.EmptySection",
                DatasetError::InvalidRatio(_) => "dataset.InvalidRatio",
            },
            Error::Synth(e) => match e {
                SynthError::Overflow { .. } => "synthcorpus.Overflow",
                SynthError::InvalidSpec(_) => "synthcorpus.InvalidSpec",
            },
            Error::Eval(EvalError::InvalidInput { .. }) => "evalkit.InvalidInput",
            Error::Io(_) => "io.Error",
        }
    }

    /// Extraction failures a batch run can skip past (exit status 1), as
    /// opposed to malformed input (exit status 2).
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            Error::RefItems(_)
                | Error::Links(_)
                | Error::Dataset(DatasetError::EmptySection)
                | Error::PageGraph(PageGraphError::NoTextLayer)
                | Error::PageGraph(PageGraphError::EncryptedPdf)
                | Error::Synth(SynthError::Overflow { .. })
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
