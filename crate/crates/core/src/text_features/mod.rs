//! Text representations: user-level TF-IDF, averaged CBOW word vectors per
//! tweet, pooled contextual token vectors, and tweet+user concatenation.

mod cbow;
mod tfidf;
mod tokenize;
mod vectors;

pub use cbow::{context_positions, train_cbow, CbowConfig, WordEmbeddingModel};
pub use tfidf::{fit_tfidf, TfidfModel, Vocabulary};
pub use tokenize::{tokenize, URL_TOKEN, USER_TOKEN};
pub use vectors::{
    concat_tweet_user, embed_tweet_static, load_contextual, pool_contextual, user_text_vector, ContextualTweetTokens,
    Pooling, Provenance, TextVector, TweetUserVector, TweetVector, UserTextVector,
};
