"""Bundled stopword lists. Override with NormalizationConfig.stopwords."""

ENGLISH = frozenset("""
a about above after again against all am an and any are aren as at be because
been before being below between both but by can cannot could couldn did didn
do does doesn doing don down during each few for from further had hadn has
hasn have haven having he her here hers herself him himself his how i if in
into is isn it its itself just me more most mustn my myself no nor not now of
off on once only or other our ours ourselves out over own same shan she
should shouldn so some such than that the their theirs them themselves then
there these they this those through to too under until up very was wasn we
were weren what when where which while who whom why will with won would
wouldn you your yours yourself yourselves
""".split())

SPANISH = frozenset("""
a al algo algunas algunos ante antes como con contra cual cuando de del desde
donde durante e el ella ellas ellos en entre era erais eran eras eres es esa
esas ese eso esos esta estaba estado estamos estan estar este esto estos fue
fueron fui fuimos ha habia han hasta hay la las le les lo los mas me mi mia
mias mientras mio mios mis mucho muchos muy nada ni no nos nosotras nosotros
nuestra nuestras nuestro nuestros o os otra otras otro otros para pero poco
por porque que quien quienes se sea sean segun ser si sido siendo sin sobre
sois somos son soy su sus suya suyas suyo suyos tal tambien tanto te tenia
tiene tienen todo todos tu tus tuya tuyas tuyo tuyos un una unas uno unos
vosotras vosotros vuestra vuestras vuestro vuestros y ya yo
""".split())

BY_LANGUAGE = {"english": ENGLISH, "spanish": SPANISH}
