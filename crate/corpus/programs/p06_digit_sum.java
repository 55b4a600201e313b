public class DigitSum {
    public static int main(String[] args) {
        String text = "a1b2c33";
        int sum = 0;
        int letters = 0;
        for (int i = 0; i < text.length(); i++) {
            char c = text.charAt(i);
            if (Character.isDigit(c)) {
                sum += c - '0';
            } else {
                letters++;
            }
        }
        return sum;
    }
}
