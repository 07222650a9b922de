// populated alongside the book chapters
