import os


# (helper) parse_requirements
def parse_requirements(srcpath, comment_char='#'):
    """Requirement specifiers of a pip requirements file

    `-r other.txt` lines are followed relative to the including file; other
    pip options and direct URLs are dropped.
    """
    reqs = []
    with open(srcpath, 'r') as f:
        for line in f:
            req = line.split(comment_char, 1)[0].strip()
            if not req or req.startswith('http'):
                continue
            if req.startswith(('-r ', '--requirement ')):
                included = req.split(None, 1)[1].strip()
                reqs += parse_requirements(
                    os.path.join(os.path.dirname(srcpath), included),
                    comment_char=comment_char,
                )
            elif not req.startswith('-'):
                reqs.append(req)
    return reqs


# (helper) read_text
def read_text(srcpath):
    if not os.path.isfile(srcpath):
        return ''
    with open(srcpath, 'r', encoding='utf-8') as f:
        return f.read()
